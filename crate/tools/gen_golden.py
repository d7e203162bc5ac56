"""Record reference outputs used by the core crate's golden-fixture tests.

* golden_indicators.csv: TA-Lib outputs (default parameters) on a seeded
  random OHLCV path. Undefined warmup entries are written as empty cells.
* golden_denoise.csv: PyWavelets level-4 Haar/periodization decomposition,
  per-level soft threshold at 2 population standard deviations, and the
  inverse transform truncated to the input length.

Run once; the outputs are checked in.
"""
import csv
import os

import numpy as np
import pywt
import talib

HERE = os.path.dirname(__file__)
OUT = os.path.join(HERE, "..", "crates", "core", "tests", "data")


def ohlcv(n, seed):
    rng = np.random.default_rng(seed)
    close = 50.0 * np.exp(np.cumsum(rng.normal(0.0003, 0.015, n)))
    open_ = close * np.exp(rng.normal(0.0, 0.004, n))
    high = np.maximum(open_, close) * np.exp(np.abs(rng.normal(0.0, 0.006, n)))
    low = np.minimum(open_, close) * np.exp(-np.abs(rng.normal(0.0, 0.006, n)))
    volume = np.round(rng.lognormal(13.0, 0.4, n))
    return open_, high, low, close, volume


def fmt(v):
    return "" if np.isnan(v) else repr(float(v))


def indicators():
    o, h, l, c, v = ohlcv(500, 7)
    sine, lead = talib.HT_SINE(c)
    cols = {
        "open": o, "high": h, "low": l, "close": c, "volume": v,
        "mom": talib.MOM(c, 10),
        "macd": talib.MACD(c, 12, 26, 9)[0],
        "mfi": talib.MFI(h, l, c, v, 14),
        "rsi": talib.RSI(c, 14),
        "atr": talib.ATR(h, l, c, 14),
        "natr": talib.NATR(h, l, c, 14),
        "ht_dcphase": talib.HT_DCPHASE(c),
        "ht_sine": sine,
        "ht_leadsine": lead,
        "ht_trendmode": talib.HT_TRENDMODE(c).astype(float),
        "adosc": talib.ADOSC(h, l, c, v, 3, 10),
        "obv": talib.OBV(c, v),
    }
    # TA-Lib reports the trend mode as an integer; mask its warmup like the others.
    cols["ht_trendmode"][:63] = np.nan
    with open(os.path.join(OUT, "golden_indicators.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(cols))
        for i in range(len(c)):
            w.writerow([fmt(cols[k][i]) for k in cols])


def denoise(x, level=4, factor=2.0):
    coeffs = pywt.wavedec(x, "haar", mode="periodization", level=level)
    out = [coeffs[0]]
    for d in coeffs[1:]:
        out.append(pywt.threshold(d, factor * np.std(d), mode="soft"))
    return pywt.waverec(out, "haar", mode="periodization")[: len(x)]


def denoise_cases():
    rng = np.random.default_rng(11)
    with open(os.path.join(OUT, "golden_denoise.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "index", "input", "output"])
        for case, n in enumerate([16, 100, 250, 257, 2013]):
            t = np.arange(n)
            x = np.sin(t / 15.0) + 0.3 * rng.standard_normal(n)
            y = denoise(x)
            for i in range(n):
                w.writerow([case, i, repr(float(x[i])), repr(float(y[i]))])


if __name__ == "__main__":
    indicators()
    denoise_cases()
