#!/usr/bin/env python3
"""Benchmark the bulk pipeline on both kernel backends (numba vs pure numpy).

Generates one synthetic landmark block, then replays it repeatedly through
normalize -> features -> predict -> smooth -> segment, timing each backend on
identical inputs. Numba compilation is warmed up before timing.

    python3 benchmarks/bench_pipeline.py --frames 2000000 --block 144000
"""

import argparse
import time

import numpy as np

from facecue import accel, affect, synth
from facecue.pipeline import BulkPipeline
from facecue.synth import Scenario, ScriptedExpression, generate
from facecue.types import ExpressionLabel

S = 1_000_000
PERIOD_US = 33_333  # 30 Hz


def build_inputs(block_frames: int):
    templates = synth.load_templates()
    scenario = Scenario(
        duration_us=(block_frames // 30 + 1) * S,
        noise_sigma=0.002,
        seed=1,
        script=[
            ScriptedExpression(ExpressionLabel.HAPPINESS, 2 * S, 6 * S, 1.0),
            ScriptedExpression(ExpressionLabel.SURPRISE, 10 * S, 14 * S, 1.0),
        ],
    )
    frames = generate(scenario, templates).frames[:block_frames]
    pts = np.stack([f.points for f in frames])
    model = affect.train(synth.make_training_set(50, 0.005, seed=123, templates=templates))
    return pts, model, templates.neutral_baseline_distances()


def run_backend(backend: str, pts, model, baseline, total_frames: int, warmup: bool):
    accel.use_backend(backend)
    block = pts.shape[0]
    if warmup:  # absorb JIT compilation outside the timed region
        warm = BulkPipeline(model, baseline)
        warm.process_block(np.arange(256, dtype=np.int64) * PERIOD_US, pts[:256])
        warm.finish()
    pipe = BulkPipeline(model, baseline)
    started = time.perf_counter()
    for i in range(total_frames // block):
        ts = (np.arange(block, dtype=np.int64) + i * block) * PERIOD_US
        pipe.process_block(ts, pts)
    events, cues = pipe.finish()
    elapsed = time.perf_counter() - started
    return elapsed, pipe.frames_processed, len(events)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=2_000_000, help="total frames per backend")
    parser.add_argument("--block", type=int, default=144_000, help="frames per block")
    parser.add_argument("--backends", default="numba,numpy")
    args = parser.parse_args()

    print(f"building inputs ({args.block} frames/block)...")
    pts, model, baseline = build_inputs(args.block)
    total = (args.frames // args.block) * args.block

    results = {}
    for backend in args.backends.split(","):
        backend = backend.strip()
        elapsed, processed, n_events = run_backend(backend, pts, model, baseline, total, warmup=backend == "numba")
        fps = processed / elapsed
        results[backend] = fps
        print(f"{backend:>6}: {processed / 1e6:.2f}M frames in {elapsed:6.1f}s  "
              f"{fps / 1e3:7.0f}k fps  ({n_events} events)")
    if "numba" in results and "numpy" in results:
        print(f"speedup numba/numpy: {results['numba'] / results['numpy']:.2f}x")


if __name__ == "__main__":
    main()
