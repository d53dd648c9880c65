import logging

import matplotlib.pyplot as plt
import numpy as np

from .constants import (
    CHANNEL_COLORS,
    DEFAULT_COLORS,
    DEFAULT_MONOCHROME_COLORS,
    afont,
    lfont,
    tfont,
)
from .frames import FluxMap
from .photon_model import expected_count, variance_count
from .sampler import SampleMode, key_states, sample_counts
from .sensor import SensorConfig

logger = logging.getLogger(__name__)


class Plotter:
    """Diagnostic plots of the sensor model and of flux recovery."""

    def __init__(self, plot_style: str = "fancy", color_style: str = "color"):
        """
        Parameters
        ----------
        plot_style : str
            The style of the plot. Options are "fancy" or "scientific".
        color_style : str
            The color style of the plot. Options are "color" or "monochrome".
        """
        if plot_style not in ["fancy", "scientific"]:
            logger.error("Invalid plot_style. Must be 'fancy' or 'scientific'.")
            raise ValueError("plot_style must be 'fancy' or 'scientific'")
        self.plot_style = plot_style

        if color_style not in ["color", "monochrome"]:
            logger.error("Invalid color_style. Must be 'color' or 'monochrome'.")
            raise ValueError("color_style must be 'color' or 'monochrome'")
        self.color_style = color_style

    def _color(self, index: int) -> str:
        if self.color_style == "monochrome":
            return DEFAULT_MONOCHROME_COLORS[index % len(DEFAULT_MONOCHROME_COLORS)]
        return DEFAULT_COLORS[index % len(DEFAULT_COLORS)]

    def plot_count_statistics(
        self,
        cfg: SensorConfig,
        phi=None,
        samples: int = 0,
        seed: int = 0,
        title: str = "Detection count statistics",
        save_path: str | None = None,
        **kwargs,
    ):
        """
        Plot the closed-form mean and variance of the count against flux.

        Parameters
        ----------
        cfg : SensorConfig
            Sensor configuration.
        phi : array_like, optional
            Fluxes to evaluate. Defaults to 60 log-spaced values in [1e3, 1e10].
        samples : int
            If positive, overlay Monte-Carlo estimates from this many exact
            renewal draws per flux.
        seed : int
            Seed of the Monte-Carlo draws.
        title : str
            The title of the plot.
        save_path : str | None
            If provided, the plot will be saved to this path.
        **kwargs : dict
            Passed to ``plt.subplots``; ``figsize`` defaults to (10, 6).

        Returns
        -------
        fig : matplotlib.figure.Figure
            The figure object containing the plot.
        ax : matplotlib.axes.Axes
            The axes object of the plot.
        """
        phi = np.logspace(3, 10, 60) if phi is None else np.asarray(phi, float)
        figsize = kwargs.pop("figsize", (10, 6))
        fig, ax = plt.subplots(figsize=figsize, **kwargs)
        ax.set_title(title, **tfont)
        ax.set_xlabel("Photon flux (photons/s)", **afont)
        ax.set_ylabel("Detections per exposure", **afont)

        ax.loglog(phi, expected_count(phi, cfg), color=self._color(0), label="Mean")
        ax.loglog(
            phi,
            variance_count(phi, cfg),
            color=self._color(1),
            linestyle="--",
            label="Variance",
        )
        if cfg.tau_d > 0:
            ax.axhline(
                cfg.T / cfg.tau_d,
                color=self._color(2),
                linestyle=":",
                label=r"$T/\tau_d$",
            )

        if samples > 0:
            counts = np.stack(
                [
                    sample_counts(
                        np.full(samples, value),
                        cfg,
                        key_states(seed, 0, np.arange(samples), index, 0),
                        SampleMode.EXACT_RENEWAL,
                    )
                    for index, value in enumerate(phi)
                ]
            )
            ax.scatter(
                phi, counts.mean(axis=1), color=self._color(0), s=12, label="MC mean"
            )
            ax.scatter(
                phi,
                counts.var(axis=1, ddof=1),
                color=self._color(1),
                marker="x",
                s=12,
                label="MC variance",
            )
            logger.info(f"Overlaid {samples} Monte-Carlo draws per flux.")

        self._plot_settings(ax)
        if save_path is not None:
            plt.savefig(save_path)
            logger.info(f"Plot saved to {save_path}")
        return fig, ax

    def plot_flux_recovery(
        self,
        true_flux: FluxMap,
        recovered: FluxMap,
        saturated: np.ndarray | None = None,
        title: str = "Flux recovery",
        save_path: str | None = None,
        **kwargs,
    ):
        """
        Scatter recovered against true flux per channel.

        Parameters
        ----------
        true_flux : FluxMap
            Ground truth.
        recovered : FluxMap
            Estimate with the same dimensions.
        saturated : numpy.ndarray, optional
            Saturation mask; flagged values are circled.
        title : str
            The title of the plot.
        save_path : str | None
            If provided, the plot will be saved to this path.

        Returns
        -------
        fig : matplotlib.figure.Figure
            The figure object containing the plot.
        ax : matplotlib.axes.Axes
            The axes object of the plot.
        """
        if true_flux.data.shape != recovered.data.shape:
            logger.error("True and recovered flux must have the same dimensions.")
            raise ValueError("True and recovered flux must have the same dimensions.")

        figsize = kwargs.pop("figsize", (7, 7))
        fig, ax = plt.subplots(figsize=figsize, **kwargs)
        ax.set_title(title, **tfont)
        ax.set_xlabel("True flux (photons/s)", **afont)
        ax.set_ylabel("Recovered flux (photons/s)", **afont)

        for channel, name in enumerate("RGB"):
            color = (
                CHANNEL_COLORS[channel]
                if self.color_style == "color"
                else self._color(channel)
            )
            ax.scatter(
                true_flux.data[:, :, channel].ravel(),
                recovered.data[:, :, channel].ravel(),
                color=color,
                s=6,
                alpha=0.5,
                label=name,
            )
        limits = [
            0.0,
            float(max(true_flux.data.max(), recovered.data.max())) * 1.05 or 1.0,
        ]
        ax.plot(limits, limits, color="black", linewidth=0.8, label=None)
        if saturated is not None and saturated.any():
            edgecolor = "red" if self.color_style == "color" else "black"
            ax.scatter(
                true_flux.data[saturated],
                recovered.data[saturated],
                edgecolor=edgecolor,
                facecolors="none",
                marker="o",
                s=50,
                label="Saturated",
                zorder=500,
            )
        ax.set_xlim(limits)
        ax.set_ylim(limits)

        self._plot_settings(ax)
        if save_path is not None:
            plt.savefig(save_path)
            logger.info(f"Plot saved to {save_path}")
        return fig, ax

    def _plot_settings(self, ax):
        """Apply final plot settings based on the selected style."""
        if self.plot_style == "fancy":
            self._plot_settings_fancy(ax)
        elif self.plot_style == "scientific":
            self._plot_settings_scientific(ax)

        ax.title.set_fontsize(16)
        ax.xaxis.label.set_fontsize(14)
        ax.yaxis.label.set_fontsize(14)
        ax.tick_params(axis="both", which="major", labelsize=12)
        plt.tight_layout()

    def _plot_settings_fancy(self, ax):
        """Apply fancy plot settings."""
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)
        ax.grid(
            visible=True,
            which="major",
            color="#E8E8E8",
            linestyle="--",
            linewidth=0.5,
        )
        ax.legend(frameon=False, prop=lfont)

    def _plot_settings_scientific(self, ax):
        """Apply scientific plot settings."""
        ax.grid(
            visible=True,
            which="major",
            color="black",
            linestyle="--",
            linewidth=0.5,
        )
        ax.grid(
            visible=True, which="minor", color="black", linestyle=":", linewidth=0.5
        )
        ax.legend(prop=lfont)


def plot_count_statistics(cfg: SensorConfig, **kwargs):
    """Shortcut for ``Plotter(...).plot_count_statistics``."""
    plotter = Plotter(
        kwargs.pop("plot_style", "fancy"), kwargs.pop("color_style", "color")
    )
    return plotter.plot_count_statistics(cfg, **kwargs)


def plot_flux_recovery(true_flux: FluxMap, recovered: FluxMap, **kwargs):
    """Shortcut for ``Plotter(...).plot_flux_recovery``."""
    plotter = Plotter(
        kwargs.pop("plot_style", "fancy"), kwargs.pop("color_style", "color")
    )
    return plotter.plot_flux_recovery(true_flux, recovered, **kwargs)
