#!/usr/bin/env python3
"""Regenerates data/synthetic/: a deterministic desk-scale stand-in for one
stock's prices, tweets, news and precomputed sentiment scores.

Prices are a seeded random walk with a slow cycle, so every feature set has
something to learn. Posts lean positive on up days and negative on down days.
Re-running with the same seed rewrites byte-identical files.
"""

import argparse
import datetime as dt
import json
import math
import random
from pathlib import Path

POSITIVE = ["beats", "growth", "record", "strong", "upgrade", "rally", "surge", "profit", "bullish", "rebound"]
NEGATIVE = ["misses", "decline", "weak", "downgrade", "lawsuit", "plunge", "loss", "bearish", "layoffs", "concerns"]
NEUTRAL = ["earnings", "call", "today", "market", "shares", "report", "quarter", "analysts", "guidance", "volume"]
EMOJI = ["\U0001F680", "\U0001F4C9", "\U0001F4C8", "\U0001F914", ""]


def business_days(start, end):
    d = start
    while d <= end:
        if d.weekday() < 5:
            yield d
        d += dt.timedelta(days=1)


def make_prices(rng, days):
    rows = []
    price = 100.0
    for i, d in enumerate(days):
        drift = 0.0004 + 0.004 * math.sin(2 * math.pi * i / 180.0)
        ret = drift + rng.gauss(0.0, 0.012)
        open_ = price * (1.0 + rng.gauss(0.0, 0.004))
        close = price * (1.0 + ret)
        high = max(open_, close) * (1.0 + abs(rng.gauss(0.0, 0.004)))
        low = min(open_, close) * (1.0 - abs(rng.gauss(0.0, 0.004)))
        volume = int(1_000_000 * (1.0 + abs(rng.gauss(0.0, 0.3))))
        rows.append((d, round(open_, 4), round(high, 4), round(low, 4), round(close, 4), round(close * 0.98, 4), volume))
        price = close
    return rows


def sentence(rng, mood):
    words = rng.sample(NEUTRAL, 3)
    if mood > 0:
        words += rng.sample(POSITIVE, rng.randint(1, 2))
    elif mood < 0:
        words += rng.sample(NEGATIVE, rng.randint(1, 2))
    rng.shuffle(words)
    return " ".join(words)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "synthetic"))
    ap.add_argument("--seed", type=int, default=20240501)
    ap.add_argument("--ticker", default="SYNT")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    days = list(business_days(dt.date(2018, 1, 2), dt.date(2023, 12, 29)))
    bars = make_prices(rng, days)
    with open(out / "prices.csv", "w", newline="\n") as f:
        f.write("Date,Open,High,Low,Close,Adj Close,Volume\n")
        for d, o, h, l, c, a, v in bars:
            f.write(f"{d.isoformat()},{o},{h},{l},{c},{a},{v}\n")

    tweets, news, scores = [], [], []
    for k, (d, o, h, l, c, a, v) in enumerate(bars):
        mood_base = 1 if c > o else -1
        for j in range(rng.randint(0, 4)):
            mood = mood_base if rng.random() < 0.7 else rng.choice([-1, 0, 1])
            # Some posts land on the weekend after Friday's bar.
            day = d + dt.timedelta(days=1 if d.weekday() == 4 and rng.random() < 0.2 else 0)
            ts = f"{day.isoformat()}T{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:00Z"
            text = f"${args.ticker} {sentence(rng, mood)} {rng.choice(EMOJI)} https://t.co/{k}x{j} #stocks @trader{j}"
            pid = f"t{k:05d}_{j}"
            likes = rng.randint(100, 5000)
            tweets.append({"id": pid, "ts": ts, "text": text, "retweets": rng.randint(0, 800), "likes": likes,
                           "comments": rng.randint(0, 300), "followers": rng.randint(50, 200000), "kind": "tweet"})
            scores.append({"id": pid, "label": mood, "confidence": round(rng.uniform(0.5, 0.99), 3)})
        if rng.random() < 0.3:
            mood = mood_base if rng.random() < 0.6 else 0
            pid = f"n{k:05d}"
            ts = f"{d.isoformat()}T{rng.randint(12, 21):02d}:00:00-05:00"
            news.append({"id": pid, "ts": ts, "text": f"{args.ticker} {sentence(rng, mood)}.", "kind": "news"})
            scores.append({"id": pid, "label": mood, "confidence": round(rng.uniform(0.5, 0.99), 3)})

    for name, rows in (("tweets.jsonl", tweets), ("news.jsonl", news), ("replay_scores.jsonl", scores)):
        with open(out / name, "w", newline="\n") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
