"""Figure rendering for the CLI report paths.

Each report subcommand that emits curve-like data also renders a PNG next to
the delimited output; rendering is non-interactive (Agg) and deterministic
for fixed inputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KWARGS = dict(dpi=144, bbox_inches="tight")


def render_error_curves(curves, fits, path):
    """Semilog wrap-error probability vs ensemble size, one series per curve.

    `curves` maps (scheme, model) to a list of ErrorCurvePoint; `fits` maps
    the same keys to an ExponentialFit or None.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    markers = {"ramsey": "o", "gaussian": "x"}
    styles = {"reduced-frequency": "-", "reduced-period": "--"}
    for (scheme, model), points in sorted(curves.items()):
        n = np.array([pt.atoms for pt in points])
        p = np.array([pt.probability for pt in points])
        label = f"{scheme}, {model}"
        color = ax.semilogy(
            n, p, markers[model], ms=5, mfc="none", label=label
        )[0].get_color()
        fit = fits.get((scheme, model))
        if fit is not None:
            ax.semilogy(
                n,
                fit.prefactor * np.exp(-fit.rate * n),
                styles[scheme],
                color=color,
                lw=1,
                alpha=0.7,
            )
    ax.set_xlabel("ensemble size N")
    ax.set_ylabel("wrap-error probability per combination step")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def render_phase_state_series(series, path):
    """Initial-state and evolved phase-state probabilities vs basis index.

    `series` maps a label to a 1-D probability array; the 'initial' series is
    over the excitation index, the others over the measurement-outcome index.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, probs in series.items():
        ax.plot(np.arange(len(probs)), probs, marker="o", ms=3, lw=1, label=label)
    ax.set_xlabel("basis index")
    ax.set_ylabel("probability")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def render_allan(points, model_points, path):
    """Log-log Allan deviation of the run with the closed-form overlay."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    taus = [pt.tau for pt in points]
    ax.loglog(taus, [pt.sigma_y for pt in points], "o-", label="simulated")
    ax.loglog(taus, model_points, "k--", label="closed form")
    ax.set_xlabel("averaging time tau (s)")
    ax.set_ylabel("Allan deviation")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
