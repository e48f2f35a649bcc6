#!/usr/bin/env python3
"""Replay a synthetic sensor frame through the windowed stream engine.

Trains a small forest on the differenced frame, pushes every point
through a ``window(period, every)`` task under the virtual clock, and
checks that the alerts coming out of the stream path are exactly the
model's offline predictions.  Prints the emitted batch cadence and the
first few alerts.
"""

from __future__ import annotations

import argparse
import sys

from watersentry import CostModelSpec, difference, synthetic_frame, train
from watersentry.stream import parse_task, replay_frame

TASK_TEMPLATE = (
    'stream\n'
    '    |from("water")\n'
    '    |window({period}, {every})\n'
    '    |httpOut("batch")\n'
)


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=3 * 24 * 60,
                   help="frame length in minutes (default: three days)")
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--anomaly-rate", type=float, default=0.03)
    p.add_argument("--period", default="5d", help="window length (default 5d)")
    p.add_argument("--every", default="2h", help="emit interval (default 2h)")
    p.add_argument("--trees", type=int, default=25)
    args = p.parse_args(argv)

    task = parse_task(TASK_TEMPLATE.format(period=args.period, every=args.every))
    frame = synthetic_frame(args.rows, seed=args.seed,
                            anomaly_rate=args.anomaly_rate)
    x, y = difference(frame).to_matrix()
    model = train(
        CostModelSpec(learner="forest", n_trees=args.trees, seed=1),
        x, y, feature_names=frame.channel_names,
    )

    result = replay_frame(task, frame, model=model)
    sizes = [len(b.points) for b in result.batches]
    print(f"rows {frame.n_rows}  batches {len(sizes)}  "
          f"batch sizes {sizes[0]}..{sizes[-1]}  alerts {len(result.alerts)}")

    offline = model.predict(x)
    ts = frame.timestamps.astype("datetime64[ns]").astype("int64")
    matches = [a.ts_ns for a in result.alerts] == [int(t) for t in ts[1:][offline]]
    print(f"stream alerts equal offline predictions: {matches}")

    for alert in result.alerts[:5]:
        doc = alert.to_doc()
        print(f"  {doc['time']}  model {doc['model'][:12]}")
    return 0 if matches else 1


if __name__ == "__main__":
    sys.exit(main())
