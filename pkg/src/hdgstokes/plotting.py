"""Log-log convergence figures written next to the CSV tables."""
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

NORMS = (
    ("err_u_l2", r"$\|u-u_h\|_\Omega$", "o-"),
    ("err_p_l2", r"$\|p-p_h\|_\Omega$", "s-"),
    ("err_triple", r"$|||(e_u, e_{\tilde u})|||$", "^-"),
    ("err_triple_full", r"$|||(e_u, e_{\tilde u}, e_p)|||_h$", "v-"),
)


def _slope_guide(ax, h, err, order, label):
    # Anchored at the finest level so the guide sits on the data.
    h0, e0 = h[-1], err[-1]
    xs = [h[0], h0]
    ax.plot(xs, [e0 * (x / h0) ** order for x in xs], "k:", lw=0.8)
    ax.annotate(label, xy=(h[0], e0 * (h[0] / h0) ** order), fontsize=8, ha="right")


def plot_convergence(table, path, dpi=150):
    """Errors in all four norms against h for one convergence table."""
    h = table.column("h")
    fig, ax = plt.subplots(figsize=(6, 4.5), dpi=dpi)
    for key, label, style in NORMS:
        ax.loglog(h, table.column(key), style, label=label, ms=4)
    if len(h) > 1:
        _slope_guide(ax, h, table.column("err_u_l2"), 2, r"$h^2$")
        _slope_guide(ax, h, table.column("err_triple_full"), 1, r"$h$")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.set_title(f"{table.variant}, $\\varepsilon={table.epsilon:+d}$")
    ax.grid(True, which="both", lw=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_pressure_comparison(tables, path, reference=None, dpi=150):
    """Pressure error of each variant against h, optionally with published values."""
    fig, ax = plt.subplots(figsize=(6, 4.5), dpi=dpi)
    # Distinct markers keep coinciding curves visible.
    for (name, table), style in zip(tables.items(), ("o-", "s--", "^-.")):
        ax.loglog(table.column("h"), table.column("err_p_l2"), style, ms=6, mfc="none", label=name)
    if reference:
        for label, (levels, values) in reference.items():
            ax.loglog([math.sqrt(2) * 2.0**-lvl for lvl in levels], values, "x--", ms=4, lw=0.8, label=label)
    ax.set_xlabel("h")
    ax.set_ylabel(r"$\|p-p_h\|_\Omega$")
    ax.grid(True, which="both", lw=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
