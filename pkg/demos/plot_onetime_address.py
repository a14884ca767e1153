"""
Precomputing a one-time address
===============================

The auction contract can later deploy a small fund-binding contract at an
address fixed by its own address, a salt and the contract's bytecode hash.
A bidder computes that address in advance and sends the bid there as an
ordinary transfer.
"""

import random

from sealbid.auction import FUND_BINDING_CODE_HASH, Salt
from sealbid.ledger import Address, derive_onetime_address

rng = random.Random(1)
auction_contract = Address.random(rng)
bidder = Address.random(rng)

# salt = auction id | bidder reveal address | 32 secret random bytes
salt = Salt(auction_id=1, bidder_reveal_address=bidder, random=rng.randbytes(32))
theta = derive_onetime_address(auction_contract, salt.salt32, FUND_BINDING_CODE_HASH)
print("one-time address", theta.hex)

# without the random part nobody can link theta to the bidder or the auction
other = Salt(1, bidder, rng.randbytes(32))
print("fresh salt      ", derive_onetime_address(auction_contract, other.salt32, FUND_BINDING_CODE_HASH).hex)
