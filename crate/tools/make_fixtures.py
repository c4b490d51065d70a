#!/usr/bin/env python3
"""Regenerate the bundled fixtures under crates/harness/fixtures/.

Produces:
  digits-1k-images.idx3 / digits-1k-labels.idx1
      1,000-sample handwritten-digit evaluation subset, 28x28 grayscale,
      IDX-encoded. Source: scikit-learn's bundled digits (NIST-derived
      8x8 images), bilinearly upscaled to 28x28.
  golden-4-images.idx3 / golden-4-labels.idx1
      First four samples of the subset, used as parser golden files.
  toy-mlp.snnx / toy-mlp.snnx.bin
      784-48-24-10 ReLU MLP trained on the 797 samples disjoint from the
      evaluation subset, then activation-normalized so the maximum hidden
      activation over all inputs is 0.35 (headroom under the smallest
      firing threshold, 0.4). The output layer is rescaled inversely, so
      logits are bit-for-bit unchanged by the normalization.

Everything is seeded; rerunning reproduces identical bytes.
"""

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image
from sklearn.datasets import load_digits

FIXTURES = Path(__file__).resolve().parent.parent / "crates" / "harness" / "fixtures"
SEED = 7
EVAL_N = 1000
SIZES = [784, 48, 24, 10]
ACT_TARGET = 0.35


def upscale(images8: np.ndarray) -> np.ndarray:
    """8x8 digits (0..16) -> 28x28 uint8 (0..255)."""
    out = np.zeros((len(images8), 28, 28), dtype=np.uint8)
    for i, img in enumerate(images8):
        arr = (img / 16.0 * 255.0).clip(0, 255).astype(np.uint8)
        out[i] = np.asarray(Image.fromarray(arr, mode="L").resize((28, 28), Image.BILINEAR))
    return out


def write_idx_images(path: Path, images: np.ndarray) -> None:
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def forward(params, x, keep=False):
    acts = []
    h = x
    for i, (w, b) in enumerate(params):
        h = h @ w.T + b
        if i < len(params) - 1:
            h = np.maximum(h, 0.0)
            if keep:
                acts.append(h)
    return h, acts


def train(params, x, y, rng, epochs=400, batch=64, lr=1e-3):
    """Plain Adam on softmax cross-entropy."""
    ms = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    vs = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    n = len(x)
    for _ in range(epochs):
        order = rng.permutation(n)
        for s in range(0, n, batch):
            idx = order[s : s + batch]
            xb, yb = x[idx], y[idx]
            # forward with cache
            hs = [xb]
            h = xb
            for i, (w, b) in enumerate(params):
                z = h @ w.T + b
                h = np.maximum(z, 0.0) if i < len(params) - 1 else z
                hs.append(h)
            logits = hs[-1]
            logits = logits - logits.max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            grad = (p - yb) / len(xb)
            # backward
            grads = []
            for i in reversed(range(len(params))):
                w, _ = params[i]
                gw = grad.T @ hs[i]
                gb = grad.sum(axis=0)
                grads.append((gw, gb))
                if i > 0:
                    grad = (grad @ w) * (hs[i] > 0)
            grads.reverse()
            step += 1
            for i, ((gw, gb), (w, b)) in enumerate(zip(grads, params)):
                mw, mb = ms[i]
                vw, vb = vs[i]
                mw[:] = b1 * mw + (1 - b1) * gw
                mb[:] = b1 * mb + (1 - b1) * gb
                vw[:] = b2 * vw + (1 - b2) * gw**2
                vb[:] = b2 * vb + (1 - b2) * gb**2
                corr1 = 1 - b1**step
                corr2 = 1 - b2**step
                w -= lr * (mw / corr1) / (np.sqrt(vw / corr2) + eps)
                b -= lr * (mb / corr1) / (np.sqrt(vb / corr2) + eps)
    return params


def normalize_activations(params, x, target):
    """Rescale so max hidden activation over x is `target`, logits unchanged."""
    _, acts = forward(params, x, keep=True)
    lams = [a.max() for a in acts]
    prev = 1.0
    for i in range(len(params) - 1):
        w, b = params[i]
        s_in = prev            # undo upstream rescale
        s_out = target / lams[i]
        params[i] = (w * (s_in * s_out), b * s_out)
        prev = lams[i] / target
    w, b = params[-1]
    params[-1] = (w * prev, b)
    return params, lams


def write_snnx(path: Path, params, input_shape):
    blob = bytearray()
    layers = []
    for w, b in params:
        w32 = w.astype("<f4")
        b32 = b.astype("<f4")
        w_off = len(blob)
        blob.extend(w32.tobytes())
        b_off = len(blob)
        blob.extend(b32.tobytes())
        layers.append(
            {
                "kind": "dense",
                "shape": [w.shape[0], w.shape[1]],
                "window_offset": 0,
                "weights": {"offset": w_off, "len": w32.nbytes},
                "bias": {"offset": b_off, "len": b32.nbytes},
            }
        )
    manifest = {
        "format": "SNNX",
        "version": 1,
        "dtype": "f32le",
        "blob": path.name + ".bin",
        "input_shape": input_shape,
        "layers": layers,
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    Path(str(path) + ".bin").write_bytes(bytes(blob))


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    digits = load_digits()
    images = upscale(digits.images)
    labels = digits.target.astype(np.uint8)

    rng = np.random.default_rng(SEED)
    order = rng.permutation(len(images))
    eval_idx, train_idx = order[:EVAL_N], order[EVAL_N:]

    write_idx_images(FIXTURES / "digits-1k-images.idx3", images[eval_idx])
    write_idx_labels(FIXTURES / "digits-1k-labels.idx1", labels[eval_idx])
    write_idx_images(FIXTURES / "golden-4-images.idx3", images[eval_idx][:4])
    write_idx_labels(FIXTURES / "golden-4-labels.idx1", labels[eval_idx][:4])

    x_train = images[train_idx].reshape(len(train_idx), -1) / 255.0
    y_train = np.eye(10)[labels[train_idx]]
    x_eval = images[eval_idx].reshape(EVAL_N, -1) / 255.0
    y_eval = labels[eval_idx]

    init = np.random.default_rng(SEED + 1)
    params = []
    for fan_in, fan_out in zip(SIZES[:-1], SIZES[1:]):
        w = init.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        params.append((w, b))

    params = train(params, x_train, y_train, np.random.default_rng(SEED + 2))

    logits_before, _ = forward(params, x_eval)
    acc_before = (logits_before.argmax(axis=1) == y_eval).mean()

    x_all = np.concatenate([x_train, x_eval])
    params, lams = normalize_activations(params, x_all, ACT_TARGET)

    logits_after, acts = forward(params, x_eval, keep=True)
    acc_after = (logits_after.argmax(axis=1) == y_eval).mean()
    assert np.allclose(logits_before, logits_after, atol=1e-9), "normalization changed logits"
    train_acc = (forward(params, x_train)[0].argmax(axis=1) == y_train.argmax(axis=1)).mean()

    write_snnx(FIXTURES / "toy-mlp.snnx", params, [784])

    print(f"train accuracy:       {train_acc:.4f}")
    print(f"eval accuracy (1000): {acc_after:.4f} (pre-normalization {acc_before:.4f})")
    print(f"pre-norm layer maxima: {[round(l, 3) for l in lams]}")
    print(f"post-norm hidden maxima: {[round(a.max(), 4) for a in acts]}")
    mean_abs_bias = [round(float(np.abs(b).mean()), 4) for _, b in params]
    print(f"mean |bias| per layer: {mean_abs_bias}")


if __name__ == "__main__":
    main()
