"""Adam optimizer over named float32 parameter arrays.

Moment buffers and the update math run in float64; parameters are
rounded to float32 once per step. Updates are elementwise, so results
are deterministic for a fixed sequence of gradients.
"""

import numpy as np

from ..errors import ShapeError


class Adam:
    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        """params: dict name -> float32 ndarray, updated in place."""
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {k: np.zeros(v.shape, dtype=np.float64) for k, v in params.items()}
        self.v = {k: np.zeros(v.shape, dtype=np.float64) for k, v in params.items()}

    def step(self, grads):
        """Apply one update from a dict name -> gradient array."""
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ShapeError(f"gradient shape mismatch for {name}: "
                                 f"{g.shape} vs {p.shape}")
            g64 = g.astype(np.float64)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g64
            v *= self.beta2
            v += (1.0 - self.beta2) * (g64 * g64)
            mhat = m / b1t
            vhat = v / b2t
            new = p.astype(np.float64) - self.lr * mhat / (np.sqrt(vhat) + self.eps)
            p[...] = new.astype(np.float32)
