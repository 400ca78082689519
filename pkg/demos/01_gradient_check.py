"""Exact backpropagation vs central finite differences.

The numeric core computes analytic reverse-mode gradients for its dense
networks; here we spot-check them against a finite-difference estimate of
d(output . g)/d(parameter) for a small random network.
"""

import numpy as np

from momarl import nn

spec = nn.MlpSpec((3, 5, 2), hidden_activation="relu", output_activation="tanh")
params = nn.init_params(spec, seed=42)
x = np.array([0.4, -1.2, 0.9])
g = np.array([1.0, -0.5])

out, cache = nn.forward(params, x)
grads, input_grad = nn.backward(params, cache, g)
print("forward output:", out)

h = 1e-5
worst = 0.0
for arr, garr in zip(params.arrays(), grads.arrays()):
    flat, gflat = arr.reshape(-1), garr.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        plus = float(nn.forward(params, x)[0] @ g)
        flat[k] = orig - h
        minus = float(nn.forward(params, x)[0] @ g)
        flat[k] = orig
        fd = (plus - minus) / (2 * h)
        worst = max(worst, abs(fd - gflat[k]) / max(abs(fd), abs(gflat[k]), 1e-4))

print(f"max relative error over {spec.n_params} parameters: {worst:.3e}")
assert worst <= 1e-4

# Adam pulls a scalar toward lower loss; the first bias-corrected step has
# magnitude close to the learning rate
p = nn.MlpParams(nn.MlpSpec((1, 1)), [np.array([[1.0]])], [np.zeros(1)])
grad = nn.MlpParams(nn.MlpSpec((1, 1)), [np.array([[1.0]])], [np.zeros(1)])
state = nn.adam_init(p, lr=0.1)
p2, state = nn.adam_step(p, grad, state)
print("adam: 1.0 with gradient 1.0 and lr 0.1 ->", p2.weights[0][0, 0])
