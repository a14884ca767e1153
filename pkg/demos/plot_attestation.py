"""
Proving the bid is funded
=========================

The oracle must confirm that the one-time address holds the committed price
without learning the address. The prover and the oracle split the session
MAC key, the prover queries its balance, and a proof ties the authenticated
balance to the commitment. The oracle then signs the bid id and commitment.
"""

import random

from sealbid.crypto import BidMessage, OracleKeypair, commit
from sealbid.deco import (
    BalanceSource,
    Oracle,
    ReferenceBackend,
    prove_bid,
    query_balance,
    three_party_handshake,
    verify_credential,
)
from sealbid.ledger import Address

rng = random.Random(2)
balances = {}
theta = Address.random(rng)
balances[theta] = 5 * 10**17

com, dec = commit(BidMessage(theta, 5 * 10**17), rng)
registry = {(1, 1): com}

keys = OracleKeypair.generate(rng)
backend = ReferenceBackend(rng)
oracle = Oracle(keys, lambda auction, bid: registry[(auction, bid)], backend)

session = three_party_handshake(BalanceSource(lambda a: balances.get(a, 0)), rng)
balance, tag = query_balance(session, theta)
proof = prove_bid(session, com, theta, balance, dec, backend)
credential = oracle.verify_and_attest(session, 1, 1, com, proof)

print("credential verifies:", verify_credential(keys.vk, credential, com))

# %%
# What the oracle saw. The address appears nowhere in it.
transcript = session.transcript.to_json()
print(transcript[:400], "...")
print("address in transcript:", theta.raw.hex() in transcript.lower())
