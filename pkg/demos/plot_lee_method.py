"""
Separating slow and fast fading
===============================

A 2 km drive with a sinusoidal shadowing profile and Rayleigh multipath.
The local mean recovers the shadowing; the residual is the fast fading.
"""

import numpy as np

from cellplan.drive_test import LeeParams, Series, fading_residual, lee_local_mean
from cellplan.synthetic import rayleigh_amplitude

params = LeeParams()
print(params.describe())

n = int(2000 / params.spacing_m)
d = params.spacing_m * np.arange(n)
slow = -85 + 6 * np.sin(2 * np.pi * d / 400.0)
rng = np.random.default_rng(0)
measured = slow + 20 * np.log10(rayleigh_amplitude(n, rng))

z = np.zeros(n)
series = Series(d, measured, z, z, spacing=params.spacing_m)
env = lee_local_mean(series, params)
err = env.nrsrp - slow[env.index]
print(f"{len(env)} envelope points, error mean {err.mean():+.2f} dB, rms {np.sqrt(np.mean(err**2)):.2f} dB")

# %%
# Peak-to-peak fast fading per 100 m segment.

res = fading_residual(series, env)
for start, stop, p2p in res.segments[:5]:
    print(f"{start:7.1f} - {stop:7.1f} m: {p2p:5.1f} dB")
