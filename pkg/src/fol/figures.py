"""Matplotlib renderings for the report paths.

Figures are written next to the delimited outputs; PNG metadata is
stripped so repeated runs produce identical bytes.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = {"dpi": 130, "metadata": {"Software": ""}}


def save_frequency_profile(profile, path: str) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9.2, 3.6))
    r = profile.radii
    axes[0].semilogx(r, profile.N, "o-", ms=3, label="N(r)")
    axes[0].semilogx(r, (profile.Phi - (profile.params.n + profile.params.a)) / 2.0,
                     "s-", ms=3, label="(Phi(r)-n-a)/2")
    axes[0].set_xlabel("r")
    axes[0].set_ylabel("frequency")
    axes[0].legend(fontsize=8)
    axes[1].semilogx(r, profile.W, "o-", ms=3, label="W(r)")
    if np.max(np.abs(profile.Wmod - profile.W)) > 0:
        axes[1].semilogx(r, profile.Wmod, "s-", ms=3, label="W + coupling")
    axes[1].set_xlabel("r")
    axes[1].set_ylabel("Weiss energy")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_solution(sol, path: str) -> None:
    fig = plt.figure(figsize=(9.2, 3.6))
    if sol.params.n == 1:
        ax = fig.add_subplot(1, 2, 1)
        xs, ys = sol.mesh.xs[0], sol.mesh.ys
        pc = ax.pcolormesh(xs, ys, sol.values, shading="auto", cmap="viridis")
        fig.colorbar(pc, ax=ax, shrink=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax2 = fig.add_subplot(1, 2, 2)
        v0 = sol.y0_slice()
        ax2.plot(xs, v0, "-", lw=1.4, label="v(x, 0)")
        if np.any(np.isfinite(sol.obstacle)):
            ax2.plot(xs, sol.obstacle, "r--", lw=1.0, label="obstacle")
        contact = sol.contact_mask()
        if contact.any():
            ax2.plot(xs[contact], v0[contact], "k.", ms=4, label="contact")
        ax2.set_xlabel("x")
        ax2.legend(fontsize=8)
    else:
        ax = fig.add_subplot(1, 1, 1)
        mid = sol.values.shape[2] // 2
        pc = ax.pcolormesh(sol.mesh.xs[0], sol.mesh.ys, sol.values[:, :, mid],
                           shading="auto", cmap="viridis")
        fig.colorbar(pc, ax=ax, shrink=0.8)
        ax.set_xlabel("x1 (x2 = 0)")
        ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_margin_histogram(reports, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    margins = np.array([r.margin for r in reports])
    ax.hist(margins, bins=40, color="#30689c")
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("margin = bound - W(competitor)")
    ax.set_ylabel("count")
    ax.set_title(f"{reports[0].theorem}: {sum(r.passed for r in reports)}/{len(reports)} pass",
                 fontsize=9)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_gap_diagram(results, labels, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 1.2 + 0.7 * len(results)))
    for row, (res, lab) in enumerate(zip(results, labels)):
        for lo, hi in res.excluded_intervals():
            ax.plot([lo, hi], [row, row], lw=6, color="#b2432f",
                    solid_capstyle="butt")
        ax.plot([res.center], [row], "k|", ms=14)
        ax.text(res.center, row + 0.22, lab, ha="center", fontsize=8)
    ax.set_ylim(-0.6, len(results))
    ax.set_yticks([])
    ax.set_xlabel("homogeneity")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
