"""
Committing to a bid
===================

A bid is a one-time address and a price. The commitment is a SHA-256 digest
of both plus 32 random bytes, so it hides the price until the bidder opens it.
"""

import random

from sealbid.crypto import BidMessage, Decommitment, com_open, commit
from sealbid.ledger import Address

rng = random.Random(0)
theta = Address.random(rng)
price = 3 * 10**17  # 0.3 ETH in wei

com, dec = commit(BidMessage(theta, price), rng)
print("commitment  ", com.hex)
print("opens       ", com_open(com, dec, BidMessage(theta, price)))

# any other price, address or randomness fails to open it
print("price + 1   ", com_open(com, dec, BidMessage(theta, price + 1)))
print("other r     ", com_open(com, Decommitment(bytes(32)), BidMessage(theta, price)))

# the same bid committed twice looks unrelated
print("recommitted ", commit(BidMessage(theta, price), rng)[0].hex)
