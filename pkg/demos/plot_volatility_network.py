"""
A volatility spillover network
==============================

Simulate intraday returns whose daily variances follow a sparse VHAR,
turn them into log MedRV series, test every ordered pair and split the
resulting graph into communities.
"""

import numpy as np

from hdgc import TimeSeriesPanel, girvan_newman, medrv_days, spillover_network

rng = np.random.default_rng(7)
K, days, M = 8, 800, 78

# two groups of four assets; log variances load on their own group's lagged average
logv = np.zeros((days, K))
groups = [range(0, 4), range(4, 8)]
for t in range(1, days):
    for g in groups:
        g = list(g)
        logv[t, g] = 0.2 * logv[t - 1, g] + 0.7 * logv[t - 1, g].mean() + 0.5 * rng.standard_normal(len(g))

returns = rng.standard_normal((days, M, K)) * np.exp(logv / 2)[:, None, :] / np.sqrt(M)
rv = np.column_stack([medrv_days(returns[:, :, k]) for k in range(K)])
panel = TimeSeriesPanel(np.log(rv), tuple(f"asset{k}" for k in range(K)))

net = spillover_network(panel, design="vhar", alpha=0.01)
print(len(net.edges), "edges out of", len(net.tests), "tests")
for e in net.edges:
    print(f"  {e.source} -> {e.target}  p = {e.p_value:.1e}")

part = girvan_newman(net.skeleton())
print("communities:", part.communities, "modularity", round(part.modularity, 3))

baseline = spillover_network(panel, design="vhar", alpha=0.01, baseline="bivariate")
print("bivariate baseline edges:", len(baseline.edges))
print(net.to_dot()[:300])
