"""
UE speed-test summary
=====================
"""

import numpy as np

from cellplan.drive_test import UeTestSample, throughput_stats

rng = np.random.default_rng(3)
samples = [UeTestSample(dl, dl / 9, lat, -90.0)
           for dl, lat in zip(rng.normal(420, 60, 34), rng.gamma(4.0, 4.0, 34))]
samples.append(UeTestSample(180.0, 15.0, 140.0, -104.0))

summary = throughput_stats(samples)
print(f"n = {summary.n}, normal approximation usable: {summary.clt_normality_assumable}")
for name, m in summary.metrics.items():
    print(f"{name:12s} mean {m.mean:8.2f} median {m.median:8.2f} sd {m.variance ** 0.5:7.2f} "
          f"outliers {list(m.outliers)}")
