"""Cross-language check of the dataset export and decision import.

Recomputes the step-1 features from the stored channels and V(0) with numpy,
then writes decisions from Python and compares the simulator's score with a
numpy sum rate.
"""
import base64
import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np


def unpack(arr):
    vals = np.frombuffer(base64.b64decode(arr["data"]), dtype="<f8")
    assert arr["dtype"] == "<f8"
    vals = vals.reshape(arr["shape"])
    if arr["shape"][-1] == 2 and len(arr["shape"]) > 1:
        return vals[..., 0] + 1j * vals[..., 1]
    return vals


def pack(z):
    inter = np.stack([z.real, z.imag], axis=-1).astype("<f8")
    return {"dtype": "<f8", "shape": list(inter.shape), "data": base64.b64encode(inter.tobytes()).decode()}


def features(h, sigma2, v):
    g = np.einsum("nkf,njf->kfj", h, v)
    k_idx = np.arange(h.shape[1])
    gkk = g[k_idx, :, k_idx]
    total = np.sum(np.abs(g) ** 2, axis=2) + sigma2
    u = np.conj(gkk) / total
    eps = np.abs(u) ** 2 * total - 2 * np.real(u * gkk) + 1
    w = 1.0 / np.maximum(eps, 1e-12)
    a = h * (w * u)[None]
    d = np.sum(w[None] * np.abs(h) ** 2 * np.abs(u[None]) ** 2, axis=1)
    m = np.einsum("njf,jf,jfk->nkf", h, w * np.abs(u) ** 2, np.conj(g))
    r = np.conj(a - m)
    b = np.broadcast_to(d[:, None, :], r.shape)
    return r, b


def sum_rate(h, sigma2, v):
    g = np.einsum("nkf,njf->kfj", h, v)
    p = np.abs(g) ** 2
    k_idx = np.arange(h.shape[1])
    sig = p[k_idx, :, k_idx]
    sinr = sig / (p.sum(axis=2) - sig + sigma2)
    return float(np.sum(np.log2(1 + sinr)))


def main():
    cli, work = sys.argv[1], Path(sys.argv[2])
    work.mkdir(parents=True, exist_ok=True)
    data = work / "dataset.jsonl"
    subprocess.run([cli, "ddm-export", "--drops", "3", "--seed", "11", "--out", str(data)], check=True)

    lines = data.read_text().splitlines()
    header = json.loads(lines[0])
    assert header["schema"] == "cellfree.ddm.dataset" and header["version"] == 1
    assert header["n_drops"] == 3 and len(lines) == 4
    p_t = None
    worst = 0.0
    decisions = []
    expected = []
    for line in lines[1:]:
        rec = json.loads(line)
        arr = rec["arrays"]
        h, sigma2, v = unpack(arr["h"]), unpack(arr["noise_power_w"]), unpack(arr["v_prev"])
        r, b = features(h, sigma2, v)
        r_c, b_c = unpack(arr["r"]), unpack(arr["b"])
        worst = max(worst, np.max(np.abs(r - r_c)) / np.max(np.abs(r)), np.max(np.abs(b - b_c)) / np.max(b))
        if p_t is None:
            p_t = float(np.max(np.sum(np.abs(v) ** 2, axis=(1, 2)))) * 2.0
        # Learned-policy stand-in: R itself, post-processed with gamma = 0.5.
        raw = r
        scaled = raw * np.sqrt(p_t / np.sum(np.abs(raw) ** 2, axis=(1, 2)))[:, None, None]
        out = 0.5 * v + 0.5 * scaled
        expected.append(sum_rate(h, sigma2, out))
        for n in range(h.shape[0]):
            decisions.append({"schema": "cellfree.ddm.decisions", "version": 1, "drop_id": rec["drop_id"],
                              "ap": n, "v": pack(out[n])})
    print(f"worst relative feature error {worst:.3e}")
    assert worst < 1e-6, worst

    dec = work / "decisions.jsonl"
    dec.write_text("".join(json.dumps(d) + "\n" for d in decisions))
    subprocess.run([cli, "ddm-eval", "--dataset", str(data), "--decisions", str(dec), "--out", str(work)],
                   check=True)
    with open(work / "ddm_sr.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 3
    for row, e in zip(rows, expected):
        got = float(row["sr_per_subcarrier"])
        assert abs(got - e) <= 1e-9 * max(1.0, e), (got, e)
        assert float(row["max_power_ratio"]) <= 1 + 1e-9

    # An incomplete decision file must be rejected.
    dec.write_text("".join(json.dumps(d) + "\n" for d in decisions[:-1]))
    res = subprocess.run([cli, "ddm-eval", "--dataset", str(data), "--decisions", str(dec), "--out", str(work)],
                         capture_output=True, text=True)
    assert res.returncode != 0 and "missing" in res.stderr, res.stderr
    print("dataset interface OK")


if __name__ == "__main__":
    main()
