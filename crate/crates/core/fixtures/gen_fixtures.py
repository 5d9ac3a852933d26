"""Regenerates the fixture policy networks.

Each network is a 16-16 ReLU MLP whose hidden weights are random and whose
output layer is a least-squares fit of Q-value-like scores for a simple
stabilising controller. Run from this directory: python3 gen_fixtures.py
"""

import json

import numpy as np


def fit(rng, lo, hi, score, hidden=(16, 16), samples=20000):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    dim = len(lo)
    x = rng.uniform(lo, hi, size=(samples, dim))
    # fold input standardisation into the first layer
    centre, half = (lo + hi) / 2, (hi - lo) / 2
    layers = []
    width, h = dim, x
    for i, n in enumerate(hidden):
        w = rng.normal(0.0, 1.0 / np.sqrt(width), size=(n, width))
        b = rng.uniform(-0.5, 0.5, size=n)
        if i == 0:
            w = w / half
            b = b - w @ centre
        h = np.maximum(h @ w.T + b, 0.0)
        layers.append((w, b))
        width = n
    s = score(x)
    target = np.stack([s, -s], axis=1)
    design = np.hstack([h, np.ones((samples, 1))])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    layers.append((coef[:-1].T, coef[-1]))
    agree = np.mean(((design @ coef)[:, 0] > (design @ coef)[:, 1]) == (s > 0))
    return layers, agree


def dump(path, dim, layers):
    out = []
    for i, (w, b) in enumerate(layers):
        out.append({"kind": "affine", "weights": w.tolist(), "bias": b.tolist()})
        if i + 1 < len(layers):
            out.append({"kind": "relu"})
    with open(path, "w") as f:
        json.dump({"input_dim": dim, "layers": out}, f, indent=1)
        f.write("\n")


def main():
    rng = np.random.default_rng(20240501)
    # pendulum: action 0 (negative torque) when theta + 0.2 omega > 0
    layers, agree = fit(rng, [-1.0, -3.0], [1.0, 3.0], lambda x: x[:, 0] + 0.2 * x[:, 1])
    dump("pendulum_policy.json", 2, layers)
    print(f"pendulum agreement {agree:.4f}")
    # cartpole: action 1 (push right) when the pole leans or falls right;
    # q0 is the score so that action 0 is preferred when it is positive
    layers, agree = fit(
        rng,
        [-2.4, -2.0, -0.21, -2.0],
        [2.4, 2.0, 0.21, 2.0],
        lambda x: -(x[:, 2] + 0.3 * x[:, 3] + 0.01 * x[:, 0] + 0.05 * x[:, 1]),
    )
    dump("cartpole_policy.json", 4, layers)
    print(f"cartpole agreement {agree:.4f}")


if __name__ == "__main__":
    main()
