"""Scalar, loop-based re-derivation of the outer iteration for 1-D problems.

Kept deliberately independent of ``nsdecopt.solver``: plain floats, explicit
per-node loops, schedule formulas re-typed from scratch.
"""

import math


def sign(v):
    return (v > 0) - (v < 0)


def reference_run(centers, r, W, K, T):
    n = len(centers)
    r_x, r_yz = 2 * r / 3, 3 / r
    tau_x, eta_y = r_x / 2, 1 / (4 * r_yz)
    chi = 1.0  # complete graph
    eta_z = 1 / (10 * r_yz * chi**2)

    def alpha(k):
        return 3 / (k + 3)

    zeros = lambda: [0.0] * n  # noqa: E731
    x, x_prev, x_tl, x_bar = zeros(), zeros(), zeros(), zeros()
    y, y_bar, z, z_bar, m = zeros(), zeros(), zeros(), zeros(), zeros()
    transcript = []
    for k in range(K):
        a = alpha(k)
        gam = (k + 2) / (k + 3)
        tau_k, eyk, ezk = tau_x / a, eta_y / a, eta_z / a
        ezk1 = eta_z / alpha(k + 1)
        eta_x = 1 / (tau_k * T)
        beta = r_x
        sig = tau_k / (2 * tau_k + beta)
        theta = 1 / (2 * r_yz)

        yu = [a * y[i] + (1 - a) * y_bar[i] for i in range(n)]
        zu = [a * z[i] + (1 - a) * z_bar[i] for i in range(n)]
        g = [r_yz * (yu[i] + zu[i]) for i in range(n)]
        gt = [sum(W[i][j] * g[j] for j in range(n)) for i in range(n)]
        gh = [sum(W[i][j] * (g[j] + m[j]) for j in range(n)) for i in range(n)]
        xh = [x[i] + gam * (x_tl[i] - x_prev[i]) for i in range(n)]
        y_new = [y[i] - eyk * (g[i] + xh[i]) for i in range(n)]
        z_new = [z[i] - ezk * gh[i] for i in range(n)]
        y_bar = [yu[i] + a * (y_new[i] - y[i]) for i in range(n)]
        z_bar = [zu[i] - theta * gt[i] for i in range(n)]
        m = [(ezk / ezk1) * (m[i] + g[i] - gh[i]) for i in range(n)]

        inner = []
        xt = list(x)
        for _ in range(T):
            nxt = []
            for i in range(n):
                gx = sign(xt[i] - centers[i])
                # x' (1 + eta (beta + tau)) = xt - eta (gx - y - tau x^k)
                nxt.append((xt[i] - eta_x * (gx - y_new[i] - tau_k * x[i])) / (1 + eta_x * (beta + tau_k)))
            xt = nxt
            inner.append(xt)
        x_tilde_new = [sum(v[i] for v in inner) / T for i in range(n)]
        x_new = [sig * xt[i] + (1 - sig) * x_tilde_new[i] for i in range(n)]
        x_bar = [a * x_tilde_new[i] + (1 - a) * x_bar[i] for i in range(n)]
        x_prev, x, x_tl = x, x_new, x_tilde_new
        y, z = y_new, z_new
        transcript.append(
            {"x": x, "x_tilde": x_tl, "x_bar": x_bar, "y": y, "y_bar": y_bar, "z": z, "z_bar": z_bar, "m": m}
        )
    return transcript


if __name__ == "__main__":
    import json

    W = [[0.5, -0.5], [-0.5, 0.5]]
    out = reference_run([-1.0, 2.0], 1.0, W, K=3, T=2)
    print(json.dumps(out, indent=1))
    assert all(math.isfinite(v) for st in out for vs in st.values() for v in vs)
