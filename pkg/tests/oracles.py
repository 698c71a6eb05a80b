"""Slow, obviously-correct reference computations shared by the test modules."""
import numpy as np

from qtrojan import cnn


def loop_forward(model: cnn.TrojanNetModel, x: np.ndarray) -> np.ndarray:
    """TrojanNet forward pass written as explicit loops, one example at a time."""
    s, k, f = model.input_size, cnn.KERNEL, model.conv_w.shape[-1]
    out = []
    for img in x:
        o = s - k + 1
        conv = np.zeros((o, o, f))
        for i in range(o):
            for j in range(o):
                for c in range(f):
                    conv[i, j, c] = np.sum(img[i:i + k, j:j + k, :] * model.conv_w[:, :, :, c]) + model.conv_b[c]
        conv = np.maximum(conv, 0)
        p = o // 2
        pooled = np.zeros((p, p, f))
        for i in range(p):
            for j in range(p):
                pooled[i, j] = conv[2 * i:2 * i + 2, 2 * j:2 * j + 2].max(axis=(0, 1))
        hidden = np.maximum(pooled.reshape(-1) @ model.dense1_w + model.dense1_b, 0)
        z = hidden @ model.dense2_w + model.dense2_b
        e = np.exp(z - z.max())
        out.append(e / e.sum())
    return np.array(out)


def _probe(model, x, onehot):
    """Loss plus every piecewise choice made on the way: ReLU masks, maxpool winners."""
    probs, c = cnn.forward(model, x)
    pattern = np.concatenate([(c.conv > 0).ravel(), c.pool_arg.ravel(), (c.hidden > 0).ravel()])
    return cnn.cross_entropy(probs, onehot), pattern


def _central(model, x, onehot, flat, i, eps):
    old = flat[i]
    flat[i] = old + eps
    up, pat_up = _probe(model, x, onehot)
    flat[i] = old - eps
    down, pat_down = _probe(model, x, onehot)
    flat[i] = old
    return (up - down) / (2 * eps), not np.array_equal(pat_up, pat_down)


def gradient_check(seed: int, size: int = 8, batch: int = 3, eps: float = 1e-3):
    """Analytic vs central-difference gradients in float64, every coordinate.

    A difference quotient is only meaningful when both probes see the same
    ReLU/maxpool pattern. Coordinates whose +-eps probes straddle a kink are
    re-probed with eps=1e-6; any still straddling are excluded and counted.
    Returns ``(worst relative error, coordinates checked, kinks excluded)``.
    """
    rng = np.random.default_rng(seed)
    model = cnn.init_weights(seed, size, dtype=np.float64)
    for k in ("conv_b", "dense1_b", "dense2_b"):  # nonzero biases exercise those paths
        getattr(model, k)[:] = rng.uniform(-0.1, 0.1, getattr(model, k).shape)
    x = rng.normal(size=(batch, size, size, cnn.CHANNELS))
    onehot = cnn.one_hot(rng.integers(0, 2, batch))
    _, grads = cnn.loss_and_grad(model, x, onehot)
    worst, checked, excluded = 0.0, 0, 0
    for name, param in model.params().items():
        flat = param.reshape(-1)
        g = grads[name].reshape(-1)
        for i in range(flat.size):
            numeric, kink = _central(model, x, onehot, flat, i, eps)
            if kink:
                numeric, kink = _central(model, x, onehot, flat, i, 1e-6)
            if kink:
                excluded += 1
                continue
            checked += 1
            # absolute floor keeps exactly-zero gradients (dead units) from dividing by zero
            denom = max(abs(g[i]) + abs(numeric), 1e-6)
            worst = max(worst, abs(g[i] - numeric) / denom)
    return worst, checked, excluded


def overfit_run(seed: int = 0, n: int = 20, epochs: int = 200):
    """Train on n random-but-separable feature tensors; returns (model, history, x, y)."""
    rng = np.random.default_rng(seed)
    y = np.array([0, 1] * (n // 2))
    x = rng.normal(scale=0.3, size=(n, 32, 32, 2)).astype(np.float32)
    model = cnn.init_weights(seed)
    cfg = cnn.TrainConfig(epochs=epochs, batch_size=n, seed=seed)
    trained, history = cnn.train(model, x, y, cfg)
    return trained, history, x, y
