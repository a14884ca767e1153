"""
How many addresses look like a bid
==================================

An observer filters a trace for addresses that first receive ETH during the
bidding window and send nothing in it. Bucketing them by balance gives the
size of the crowd each bid hides in.
"""

import random

from sealbid import anonymity
from sealbid.ledger import Address, Transaction

rng = random.Random(3)
pool = [Address.random(rng) for _ in range(400)]
trace = []
for block in sorted(rng.randint(0, 1000) for _ in range(6000)):
    to = rng.choice(pool) if rng.random() < 0.5 else Address.random(rng)
    value = int(10 ** rng.uniform(15, 20.5))
    trace.append(Transaction(block, 1_600_000_000 + 13 * block, rng.choice(pool), to, value))

window = anonymity.Window(500, 700)
candidates = anonymity.candidate_addresses(trace, window)
print(len(candidates), "candidate addresses")
print(anonymity.histogram_csv(anonymity.bucket_by_balance(candidates)))
print("highest hidden bid is at most", anonymity.max_balance_bound(trace, window) / 1e18, "ETH")

# %%
# Finer 1.25x buckets between 0.1 and 10 ETH.
spec = anonymity.geometric_buckets("0.1", "10", "1.25")
for bucket in anonymity.bucket_by_balance(candidates, spec)[:6]:
    print(anonymity.format_eth(bucket.lo), anonymity.format_eth(bucket.hi), bucket.count)
