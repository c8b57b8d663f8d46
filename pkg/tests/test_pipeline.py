import numpy as np
import pytest

from vqtk.data.synthetic import GaussianMixtureWorld, WorldConfig
from vqtk.pipeline import DemoConfig, DemoGraph, run_demo
from vqtk.sweep import SweepConfig, project_maps, run_sweep
from vqtk.errors import UsageError
from vqtk.utils.progress_tracker import ProgressTracker


def test_world_walks_within_one_component(world):
    maps, labels = world.sample_with_modes(5, seed=1)
    m = world.cfg.modes_per_component
    for fmap, grid in zip(maps, labels):
        assert fmap.data.shape == (8, 8, 8)
        assert fmap.data.dtype == np.float32
        assert len(set((grid // m).reshape(-1).tolist())) == 1


def test_world_is_seeded():
    a = GaussianMixtureWorld(WorldConfig(), seed=1).sample(3, seed=2)
    b = GaussianMixtureWorld(WorldConfig(), seed=1).sample(3, seed=2)
    assert a == b


def test_demo_graph_reports_every_step():
    events = []
    graph = DemoGraph(DemoConfig(n_maps=8, n_generated=4), progress_tracker=ProgressTracker(
        lambda step, status, message: events.append((step, status))))
    result = graph.run(seed=0)

    started = [step for step, status in events if status == "started"]
    assert started == ["generate", "build_codebooks", "tokenize", "fit_proposals", "sample", "evaluate"]
    assert result.seed == 0
    assert result.cluster_quant_error <= result.random_quant_error


def test_demo_is_reproducible():
    cfg = DemoConfig(n_maps=8, n_generated=4)
    assert run_demo([5], cfg) == run_demo([5], cfg)


def test_cluster_codebook_wins_on_most_seeds():
    report = run_demo(range(10))
    assert report.total == 10
    assert report.wins >= 9


@pytest.mark.parametrize("seed", range(5))
def test_sweep_quant_error_is_non_increasing_in_size(seed):
    maps = GaussianMixtureWorld(WorldConfig(), seed=seed).sample(32, seed=seed + 100)
    frame = run_sweep(maps, SweepConfig(seed=seed, max_iters=5))

    assert frame["size"].tolist() == [16, 32, 64, 128, 256, 512, 1024]
    errors = frame["quant_error"].to_numpy()
    assert np.all(np.diff(errors) <= 1e-12 * errors[:-1])


def test_sweep_over_dimensions(world_maps):
    frame = run_sweep(world_maps, SweepConfig(sizes=[8, 4, 8], dims=[8, 2], max_iters=5))
    assert list(zip(frame["dim"], frame["size"])) == [(2, 4), (2, 8), (8, 4), (8, 8)]
    assert frame["usage"].between(0.0, 100.0).all()
    assert (frame["ppl"] >= 1.0).all()


def test_sweep_grid_checks(world_maps):
    with pytest.raises(UsageError):
        run_sweep(world_maps, SweepConfig(sizes=[]))
    with pytest.raises(UsageError):
        SweepConfig(sizes=[0, 4])
    with pytest.raises(UsageError):
        project_maps(world_maps, 9)


def test_projection_keeps_the_map_shape(world_maps):
    projected = project_maps(world_maps, 3)
    assert projected[0].data.shape == (8, 8, 3)
    assert len(projected) == len(world_maps)
