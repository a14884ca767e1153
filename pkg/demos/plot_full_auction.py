"""
A full auction
==============

Three bidders, one of whom never reveals. The highest revealed price wins,
losers are refunded, and the silent bidder's funds stay locked at an address
nobody can spend from.
"""

import json

from sealbid.scenario import Scenario, simulate

scenario = Scenario.from_dict(
    {
        "seed": 11,
        "bidders": [
            {"funding_eth": "1", "price_eth": "0.2"},
            {"funding_eth": "1", "price_eth": "0.35"},
            {"funding_eth": "1", "price_eth": "0.6", "reveal": False},
        ],
        "decoys": {"count": 120, "history": 80},
    }
)
sim = simulate(scenario)
report = sim.report

print("winner       ", json.dumps(report["winner"]))
print("seller gets  ", int(report["seller_payout_wei"]) / 1e18, "ETH")
print("locked       ", int(report["locked_funds_wei"]) / 1e18, "ETH")
print("conservation ", report["conservation"]["ok"])

# %%
# Every bid transfer is just one more first-time receiver in the bidding window.
for b in report["bidders"]:
    print(b["index"], b["onetime_address"], "candidate:", b["is_candidate"],
          "same-bucket addresses:", b["anonymity_set_size"])
