import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pytest  # noqa: E402

from spadsim.frames import FluxMap  # noqa: E402
from spadsim.plotter import (  # noqa: E402
    Plotter,
    plot_count_statistics,
    plot_flux_recovery,
)
from spadsim.sensor import SensorConfig  # noqa: E402


@pytest.fixture(autouse=True)
def close_figures():
    yield
    plt.close("all")


def test_invalid_styles():
    with pytest.raises(ValueError):
        Plotter(plot_style="retro")
    with pytest.raises(ValueError):
        Plotter(color_style="sepia")


def test_count_statistics_plot(long_exposure_sensor, tmp_path):
    path = tmp_path / "counts.png"
    fig, ax = plot_count_statistics(
        long_exposure_sensor, phi=np.logspace(4, 9, 6), samples=200, save_path=path
    )
    labels = [line.get_label() for line in ax.get_lines()]
    assert labels[:2] == ["Mean", "Variance"]
    assert len(ax.collections) == 2
    assert path.is_file()


def test_count_statistics_without_dead_time():
    plotter = Plotter(plot_style="scientific", color_style="monochrome")
    fig, ax = plotter.plot_count_statistics(SensorConfig(tau_d=0.0))
    assert len(ax.get_lines()) == 2


def test_flux_recovery_plot(sensor):
    truth = FluxMap.uniform(4, 4, 5e7)
    recovered = FluxMap(np.full((4, 4, 3), 5.1e7))
    saturated = np.zeros((4, 4, 3), dtype=bool)
    saturated[0, 0, 0] = True
    fig, ax = plot_flux_recovery(truth, recovered, saturated=saturated)
    assert len(ax.collections) == 4
    assert ax.get_xlim()[1] == pytest.approx(5.1e7 * 1.05)


def test_flux_recovery_rejects_mismatched_shapes():
    with pytest.raises(ValueError):
        plot_flux_recovery(FluxMap.uniform(4, 4, 1.0), FluxMap.uniform(4, 5, 1.0))
