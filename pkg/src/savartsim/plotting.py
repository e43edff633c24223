"""Scenario figures rendered to SVG files next to the CSV output."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.5,
    "svg.hashsalt": "savartsim",
    "svg.fonttype": "none",
}


def _figure(nrows=1, ncols=1, width=5.0):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(nrows, ncols, figsize=(width, width * golden * nrows / ncols + 0.4),
                               squeeze=False)
    return fig, ax


def _save(fig, path):
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def interference_figure(path, theta_mrad, cc_raw, cc_corr, fit_raw=None, fit_corr=None):
    fig, ax = _figure()
    ax = ax[0, 0]
    ax.plot(theta_mrad, cc_raw, "o", mfc="none", label="raw")
    ax.plot(theta_mrad, cc_corr, "o", label="accidentals subtracted")
    fine = np.linspace(min(theta_mrad), max(theta_mrad), 600)
    for fit, style in ((fit_raw, "--"), (fit_corr, "-")):
        if fit is not None:
            ax.plot(fine, fit.amplitude * np.cos(fit.omega * fine + fit.phase) + fit.offset, style, color="k")
    ax.set_xlabel("SP2 tilt (mrad)")
    ax.set_ylabel("coincidences")
    ax.legend(frameon=False)
    return _save(fig, path)


def bell_curves_figure(path, delta_a, curves):
    """``curves`` maps (delta_b_label, ch_a, ch_b) -> coincidence array over ``delta_a``."""
    labels = sorted({k[0] for k in curves})
    fig, axes = _figure(len(labels), 1, width=5.0)
    for ax, lab in zip(axes[:, 0], labels):
        for (lb, ca, cb), y in sorted(curves.items()):
            if lb == lab:
                ax.plot(delta_a, y, "o-", label=f"A{ca} B{cb}")
        ax.set_title(f"Bob phase {lab}", fontsize=9)
        ax.set_ylabel("coincidences")
        ax.legend(frameon=False, ncol=4)
    axes[-1, 0].set_xlabel("Alice LC phase (rad)")
    return _save(fig, path)


def waist_figure(path, panels):
    """``panels`` is a list of (title, [(label, z, w, fitted_beam_curve_or_None), ...])."""
    fig, axes = _figure(len(panels), 1, width=5.0)
    for ax, (title, series) in zip(axes[:, 0], panels):
        for label, z, w, fitted in series:
            line, = ax.plot(z, w, "o", label=label)
            if fitted is not None:
                zf, wf, z0 = fitted
                ax.plot(zf, wf, "-", color=line.get_color())
                ax.axvline(z0, ls="--", lw=0.8, color=line.get_color())
        ax.set_title(title, fontsize=9)
        ax.set_ylabel("w (um)")
        ax.legend(frameon=False)
    axes[-1, 0].set_xlabel("z (mm)")
    return _save(fig, path)


def sensitivity_figure(path, x_um, series):
    """``series`` is a list of (label, intensity, fit)."""
    fig, axes = _figure(len(series), 1, width=5.0)
    for ax, (label, y, fit) in zip(axes[:, 0], series):
        ax.plot(x_um, y, ".", label=label)
        ax.plot(x_um, fit.amplitude * np.cos(fit.omega * np.asarray(x_um) + fit.phase) + fit.offset,
                "-", color="k", lw=0.8, label=f"omega={fit.omega:.5f} rad/um")
        ax.set_ylabel("intensity (arb.)")
        ax.legend(frameon=False)
    axes[-1, 0].set_xlabel("motor displacement x (um)")
    return _save(fig, path)


def loss_budget_figure(path, stages):
    """``stages`` is a list of (label, cumulative transmission)."""
    fig, ax = _figure()
    ax = ax[0, 0]
    labels = [s[0] for s in stages]
    ax.bar(range(len(stages)), [s[1] for s in stages], color="0.5")
    ax.set_xticks(range(len(stages)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("cumulative transmission per arm")
    return _save(fig, path)
