"""The learned surrogate end to end.

The iterative optimizer labels channel draws; a small fully-connected
network learns the map from channel features to (rate, powers,
beamformer).  At inference the predicted beamformer is re-lifted through
the leakage null space — so the zero-leakage guarantee survives any
prediction error — and uniformly shrunk into the power region before the
true rate is evaluated.

Uses the shipped full-size artifacts under data/ when present; otherwise
trains a small model on the spot.

Run:  python3 demos/04_learned_surrogate.py
"""

import os
import time

import numpy as np

from relaysec import dnn
from relaysec.config import default_config, derive_rng, generate_realization

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")


def get_artifacts():
    ds_path = os.path.join(DATA, "dataset_n12.jsonl")
    model_path = os.path.join(DATA, "model_n12.json")
    if os.path.exists(ds_path) and os.path.exists(model_path):
        print("using shipped artifacts (10^4-sample dataset, 400-epoch model)")
        return dnn.load_dataset(ds_path), dnn.load_model(model_path)
    print("shipped artifacts missing; generating a small dataset (few minutes)")
    cfg = default_config()
    samples = dnn.generate_dataset(cfg, 150, master_seed=99, quiet=False)
    tc = dnn.TrainConfig(epochs=60, seed=0)
    model, hist = dnn.train(samples, tc)
    print(f"trained: best validation MSE {hist['best_val_mse']:.4f}")
    return samples, model


def main():
    cfg = default_config()
    samples, model = get_artifacts()
    n_val = max(1, len(samples) // 10)
    val = samples[len(samples) - n_val:][:50]
    print(f"\nevaluating on {len(val)} validation samples")

    rates_pred, rates_label, infer_times = [], [], []
    for s in val:
        ch = dnn.channel_from_features(s.theta, cfg.N, cfg.N_E)
        t0 = time.perf_counter()
        q = model.predict(s.theta)
        infer_times.append(time.perf_counter() - t0)
        R_s, P_s, P_J1, v, _ = dnn.predict_point(model, cfg, ch)
        rates_pred.append(R_s)
        rates_label.append(float(s.q[0]))
        del q
    asr_p, asr_l = np.mean(rates_pred), np.mean(rates_label)
    print(f"  label ASR (optimizer): {asr_l:.4f} bits")
    print(f"  surrogate ASR (true rate at projected prediction): {asr_p:.4f} bits")
    print(f"  relative ASR: {asr_p / asr_l:.1%}")
    print(f"  raw inference: {1e3 * np.mean(infer_times):.3f} ms/sample "
          "(vs seconds per optimizer solve)")

    print("\ncompute accounting (per forward pass / per solver iteration):")
    for N in (12, 24, 48):
        flops = dnn.compact_flops(N, 2)
        ops = dnn.complexity_spca(N, 2)
        print(f"  N={N}: network {flops:,} FLOPs vs solver iteration "
              f"~{ops:,.0f} ops (x{ops / flops:.1f})")


if __name__ == "__main__":
    main()
