"""
What the protocol costs
=======================

Gas per operation comes from a bundled schedule. Fees are gas times the gas
price times the ETH price, rounded to cents.
"""

from sealbid.fees import MarketParams, format_cost_tables, overhead, role_cost

params = MarketParams(gas_price_gwei=45, eth_usd=3200)
print(format_cost_tables(params))

# %%
# The overhead of hiding the bid amount shrinks or grows with the gas price.
for gwei in (15, 45, 100):
    p = MarketParams(gwei, 3200)
    gas, usd = overhead("proposed", "simple_deposit", p)
    print(f"{gwei:>4} gwei: bidder pays {role_cost('proposed', 'bidder', p)[1]} USD, {usd} USD more than with a deposit")
