"""Independent numpy oracle for the 4D Gaussian uncertainty products.

Field: f(x) = prod_a exp(-(x_a - L_a/2)^2 / (4 s_a^2) + i k_a x_a) sampled at
cell centers. Position spread uses step-density moments (midpoint variance
plus h^2/12); momentum spread uses the DFT law on p = 2 pi n / L with signed
n in [-N/2, N/2).
"""
import numpy as np

def products(L, N, s, k):
    h = [L[a] / N[a] for a in range(4)]
    axes = [(np.arange(N[a]) + 0.5) * h[a] for a in range(4)]
    grids = np.meshgrid(*axes, indexing="ij")
    f = np.ones(N, dtype=complex)
    for a in range(4):
        f = f * np.exp(-(grids[a] - L[a] / 2) ** 2 / (4 * s[a] ** 2) + 1j * k[a] * grids[a])
    g = np.abs(f) ** 2
    g /= g.sum()
    C = np.abs(np.fft.fftn(f)) ** 2
    C /= C.sum()
    out = []
    for a in range(4):
        other = tuple(b for b in range(4) if b != a)
        gx = g.sum(axis=other)
        mu = (gx * axes[a]).sum()
        dx = np.sqrt((gx * (axes[a] - mu) ** 2).sum() + h[a] ** 2 / 12)
        cp = C.sum(axis=other)
        n = np.fft.fftfreq(N[a], d=1.0 / N[a])
        p = 2 * np.pi * n / L[a]
        mp = (cp * p).sum()
        dp = np.sqrt((cp * (p - mp) ** 2).sum())
        out.append((dx, dp, dx * dp))
    return out

if __name__ == "__main__":
    L = [16.0] * 4
    N = [32] * 4
    s = [1.6] * 4
    k = [-1.5, 0.4, 0.0, -0.3]
    for a, (dx, dp, pr) in enumerate(products(L, N, s, k)):
        print(f"axis {a}: dx={dx:.15e} dp={dp:.15e} product={pr:.15e}")
    L2 = [12.0, 10.0, 10.0, 12.0]
    N2 = [24, 20, 20, 24]
    s2 = [1.2, 1.0, 1.1, 1.3]
    for a, (dx, dp, pr) in enumerate(products(L2, N2, s2, [0.5, 0.0, 0.0, 0.0])):
        print(f"aniso axis {a}: dx={dx:.15e} dp={dp:.15e} product={pr:.15e}")
