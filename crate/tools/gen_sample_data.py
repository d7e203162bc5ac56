"""Generate the bundled synthetic daily OHLCV sample set under data/.

Prices follow a geometric random walk per ticker; open/high/low and volume
are derived from the close path with independent noise. A handful of rows
are blanked out as "null" to mirror the vendor export format.
"""
import csv
import os

import numpy as np

TICKERS = [
    # symbol, start price, annual drift, annual vol
    ("SYNA", 65.0, 0.05, 0.18),
    ("SYNB", 45.0, 0.06, 0.16),
    ("SYNC", 20.0, 0.18, 0.24),
    ("SYND", 12.0, 0.15, 0.32),
    ("SYNE", 70.0, 0.12, 0.15),
    ("SYNF", 28.0, 0.14, 0.22),
    ("SYNG", 45.0, 0.17, 0.28),
    ("SYNH", 70.0, -0.04, 0.36),
]
START = np.datetime64("2009-12-31")
END = np.datetime64("2017-12-29")


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    days = np.arange(START, END + 1, dtype="datetime64[D]")
    days = days[np.is_busday(days)]
    rng = np.random.default_rng(20171229)
    for sym, p0, mu, vol in TICKERS:
        n = len(days)
        dt = 1.0 / 252.0
        shocks = rng.standard_normal(n - 1)
        log_ret = (mu - 0.5 * vol * vol) * dt + vol * np.sqrt(dt) * shocks
        close = p0 * np.exp(np.concatenate([[0.0], np.cumsum(log_ret)]))
        gap = rng.normal(0.0, 0.25 * vol * np.sqrt(dt), n)
        open_ = np.concatenate([[close[0]], close[:-1]]) * np.exp(gap)
        span = np.abs(rng.normal(0.0, 0.6 * vol * np.sqrt(dt), n))
        high = np.maximum(open_, close) * np.exp(span)
        low = np.minimum(open_, close) * np.exp(-np.abs(rng.normal(0.0, 0.6 * vol * np.sqrt(dt), n)))
        volume = np.round(rng.lognormal(15.5, 0.35, n)).astype(np.int64)
        blank = set(rng.choice(np.arange(5, n - 5), size=int(rng.integers(0, 4)), replace=False).tolist())
        path = os.path.join(out_dir, f"{sym}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"])
            for i in range(n):
                if i in blank:
                    w.writerow([str(days[i])] + ["null"] * 6)
                    continue
                w.writerow([
                    str(days[i]),
                    f"{open_[i]:.6f}",
                    f"{high[i]:.6f}",
                    f"{low[i]:.6f}",
                    f"{close[i]:.6f}",
                    f"{close[i] * 0.97:.6f}",
                    int(volume[i]),
                ])


if __name__ == "__main__":
    main()
