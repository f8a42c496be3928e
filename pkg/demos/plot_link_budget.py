"""
Link budget for a 3.5 GHz carrier
=================================

Evaluate the shipped 60 MHz budget, then sweep the throughput target.
"""

from cellplan import LinkBudget, evaluate_budget, paper_budget_path
from cellplan.link_budget import format_budget, required_nrsrp_for_throughput

budget = LinkBudget.load(paper_budget_path())
result = evaluate_budget(budget)
print(format_budget(budget, result))

# %%
# Higher cell-edge throughput needs a stronger reference signal.

for mbps in (50, 100, 200, 400, 800):
    print(f"{mbps:4d} Mbps -> {required_nrsrp_for_throughput(budget, mbps):7.2f} dBm")
