"""Desk-scale experiment: does a codebook clustered from the features beat a
random one as a token space for a generative proposal model?

For every seed the graph generates a synthetic Gaussian-mixture world, builds
a cluster codebook and a random data-anchor codebook of the same size,
tokenizes the world with both, fits an n-gram to each token corpus, samples new
grids, detokenizes them, and compares in-sample perplexity and
Fréchet(real features, generated features).
"""
import logging
from typing import Dict, List, Optional, Sequence, TypedDict

import numpy as np
from langgraph.graph import END, StateGraph
from pydantic import BaseModel, Field

from vqtk.cluster.kmeans import KMeansConfig, build_cluster_tokenizer, random_codebook
from vqtk.core.types import Codebook, FeatureMap, TokenGrid
from vqtk.data.synthetic import GaussianMixtureWorld, WorldConfig
from vqtk.metrics.frechet import feature_stats, frechet_distance
from vqtk.metrics.perplexity import perplexity
from vqtk.proposal.ngram import NgramConfig, NgramModel, ngram_fit, sample_grids
from vqtk.quant.vq import vq_quantize
from vqtk.schemas import DemoReport, DemoSeedResult
from vqtk.utils.progress_tracker import ProgressTracker

logger = logging.getLogger(__name__)

CODEBOOKS = ("cluster", "random")


class DemoConfig(BaseModel):
    world: WorldConfig = Field(default_factory=WorldConfig)
    n_maps: int = Field(default=64, ge=1)
    n_generated: int = Field(default=64, ge=1)
    k: int = Field(default=16, ge=1)
    kmeans_n_init: int = Field(default=3, ge=1)
    kmeans_max_iters: int = Field(default=50, ge=1)
    order: int = Field(default=2, ge=1)
    alpha: float = Field(default=1.0, gt=0.0)


class DemoState(TypedDict, total=False):
    seed: int
    real: List[FeatureMap]
    books: Dict[str, Codebook]
    tokens: Dict[str, List[TokenGrid]]
    quant_errors: Dict[str, float]
    models: Dict[str, NgramModel]
    generated: Dict[str, List[FeatureMap]]
    result: DemoSeedResult


def _child_seeds(seed: int, count: int) -> List[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


class DemoGraph:

    def __init__(self, cfg: DemoConfig = DemoConfig(), n_jobs: int = 1,
                 progress_tracker: Optional[ProgressTracker] = None):
        self.cfg = cfg
        self.n_jobs = n_jobs
        self.progress_tracker = progress_tracker
        self.graph = self._build_graph()

    def _build_graph(self):
        workflow = StateGraph(DemoState)

        workflow.add_node("generate", self._tracked("generate", self._generate))
        workflow.add_node("build_codebooks", self._tracked("build_codebooks", self._build_codebooks))
        workflow.add_node("tokenize", self._tracked("tokenize", self._tokenize))
        workflow.add_node("fit_proposals", self._tracked("fit_proposals", self._fit_proposals))
        workflow.add_node("sample", self._tracked("sample", self._sample))
        workflow.add_node("evaluate", self._tracked("evaluate", self._evaluate))

        workflow.set_entry_point("generate")
        workflow.add_edge("generate", "build_codebooks")
        workflow.add_edge("build_codebooks", "tokenize")
        workflow.add_edge("tokenize", "fit_proposals")
        workflow.add_edge("fit_proposals", "sample")
        workflow.add_edge("sample", "evaluate")
        workflow.add_edge("evaluate", END)

        return workflow.compile()

    def _tracked(self, step, fn):
        def node(state: DemoState) -> DemoState:
            if self.progress_tracker:
                self.progress_tracker.start(step, f"seed {state['seed']}: {step}")
            try:
                result = fn(state)
            except Exception as e:
                if self.progress_tracker:
                    self.progress_tracker.error(step, str(e))
                raise
            if self.progress_tracker:
                self.progress_tracker.complete(step, f"seed {state['seed']}: {step} done")
            return result
        return node

    def _generate(self, state: DemoState) -> DemoState:
        world_seed, data_seed, *_ = _child_seeds(state["seed"], 5)
        world = GaussianMixtureWorld(self.cfg.world, seed=world_seed)
        return {"real": world.sample(self.cfg.n_maps, seed=data_seed)}

    def _build_codebooks(self, state: DemoState) -> DemoState:
        _, _, cluster_seed, random_seed, _ = _child_seeds(state["seed"], 5)
        real = state["real"]
        kmeans = KMeansConfig(
            k=self.cfg.k,
            seed=cluster_seed,
            n_init=self.cfg.kmeans_n_init,
            max_iters=self.cfg.kmeans_max_iters,
            batch_size=sum(m.positions for m in real),
        )
        return {"books": {
            "cluster": build_cluster_tokenizer(real, kmeans, n_jobs=self.n_jobs),
            "random": random_codebook(real, self.cfg.k, seed=random_seed),
        }}

    def _tokenize(self, state: DemoState) -> DemoState:
        tokens, errors = {}, {}
        for name in CODEBOOKS:
            outputs = [vq_quantize(m, state["books"][name], n_jobs=self.n_jobs) for m in state["real"]]
            tokens[name] = [out.tokens for out in outputs]
            errors[name] = float(np.mean([out.quant_error for out in outputs]))
        return {"tokens": tokens, "quant_errors": errors}

    def _fit_proposals(self, state: DemoState) -> DemoState:
        ngram = NgramConfig(order=self.cfg.order, vocab_size=self.cfg.k, alpha=self.cfg.alpha)
        return {"models": {name: ngram_fit(state["tokens"][name], ngram) for name in CODEBOOKS}}

    def _sample(self, state: DemoState) -> DemoState:
        sample_seed = _child_seeds(state["seed"], 5)[4]
        world = self.cfg.world
        generated = {}
        for name in CODEBOOKS:
            grids = sample_grids(state["models"][name], world.height, world.width,
                                 self.cfg.n_generated, sample_seed)
            generated[name] = [state["books"][name].lookup(g) for g in grids]
        return {"generated": generated}

    def _evaluate(self, state: DemoState) -> DemoState:
        real_stats = feature_stats(state["real"])
        values = {}
        for name in CODEBOOKS:
            values[f"{name}_ppl"] = perplexity(state["models"][name], state["tokens"][name])
            values[f"{name}_frechet"] = frechet_distance(real_stats, feature_stats(state["generated"][name]))
            values[f"{name}_quant_error"] = state["quant_errors"][name]
        result = DemoSeedResult(seed=state["seed"], **values)
        logger.info(
            f"seed {state['seed']}: ppl cluster={result.cluster_ppl:.4g} random={result.random_ppl:.4g}, "
            f"frechet cluster={result.cluster_frechet:.4g} random={result.random_frechet:.4g}"
        )
        return {"result": result}

    def run(self, seed: int) -> DemoSeedResult:
        result = self.graph.invoke(DemoState(seed=seed))
        return result["result"]


def run_demo(
    seeds: Sequence[int],
    cfg: DemoConfig = DemoConfig(),
    n_jobs: int = 1,
    progress_tracker: Optional[ProgressTracker] = None,
) -> DemoReport:
    graph = DemoGraph(cfg, n_jobs=n_jobs, progress_tracker=progress_tracker)
    results = [graph.run(seed) for seed in seeds]
    wins = sum(r.cluster_wins for r in results)
    if progress_tracker:
        progress_tracker.complete_all()
    logger.info(f"cluster codebook won on {wins}/{len(results)} seeds")
    return DemoReport(seeds=results, wins=wins, total=len(results))
