#!/usr/bin/env python3
"""Generates data/synthetic_bubble.csv.

The log-price path is piecewise linear with a deterministic alternating
perturbation in the final regime, so every calibration statistic is known in
closed form:

  regime I   (build-up):    slope  eps (1 - c) / 252 per day
  regime II  (transition):  flat
  regime III (equilibrium): slope -eps c / 252 per day, plus alternating +-d

With eps = 0.4, c = 0.6, d = 0.0008 the calibration must recover
eps = 0.4, c = 0.6, sigma = d * sqrt(260) ~ 0.0129 and an alpha satisfying
exp(-2 alpha x_r) = c for the supplied equilibrium level x_r = 1 (the level
is an input to the alpha step, not a feature of the path). No market data is
involved.
"""

import datetime
import pathlib

EPS = 0.4
C = 0.6
D = 0.0008
N_I, N_II, N_III = 130, 40, 106
START_PRICE = 100.0
START_DATE = datetime.date(2021, 1, 1)


def main() -> None:
    slope_i = EPS * (1.0 - C) / 252.0
    slope_iii = -EPS * C / 252.0
    x = [0.0]
    for _ in range(N_I):
        x.append(x[-1] + slope_i)
    for _ in range(N_II):
        x.append(x[-1])
    for k in range(N_III):
        sign = 1.0 if k % 2 == 0 else -1.0
        x.append(x[-1] + slope_iii + sign * D)

    import math

    dates = [START_DATE + datetime.timedelta(days=i) for i in range(len(x))]
    rows = ["date,price"]
    for day, v in zip(dates, x):
        rows.append(f"{day.isoformat()},{repr(START_PRICE * math.exp(v))}")

    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic_bubble.csv"
    out.write_text("\n".join(rows) + "\n")
    t1, t2, t3 = N_I, N_I + N_II, len(x) - 1
    print(f"wrote {out} ({len(x)} rows)")
    print(f"regime dates: t1={dates[t1]}, t2={dates[t2]}, t3={dates[t3]}, x_r=1.0")


if __name__ == "__main__":
    main()
