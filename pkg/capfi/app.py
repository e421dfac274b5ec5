"""Application orchestrator for the CAPFI command line."""

from pathlib import Path
from typing import Optional, Sequence

from loguru import logger

from capfi import __version__
from capfi.config.config_manager import ConfigManager
from capfi.config.settings import (
    BuiltinOracleConfig,
    ExportFormat,
    GeneratorSpec,
    RunConfig,
)
from capfi.core.importance import (
    CrossContextResult,
    ImportanceReport,
    compute_cross,
    manifest_summary,
    run_full_analysis,
)
from capfi.core.metrics import evaluate, make_batch
from capfi.core.permutation import context_rows
from capfi.core.report_store import ReportStore
from capfi.data.manifest import load_manifest, save_manifest
from capfi.data.models import Manifest
from capfi.data.subsets import (
    CROSS_CONTEXT_PRESETS,
    ContextSet,
    build_subsets,
    resolve_contexts,
    subset_algebra,
)
from capfi.features.transforms import parse_modalities
from capfi.oracle.base import Oracle
from capfi.oracle.builtin import build_builtin_oracle
from capfi.oracle.external import ExternalOracle
from capfi.report.plots import render_all
from capfi.report.tables import baseline_frame, cardinality_table, cross_frame, format_table
from capfi.synth.generator import generate, plant_check
from capfi.utils.exceptions import ConfigError
from capfi.utils.logger import setup_logging
from capfi.utils.platform import get_app_paths
from capfi.utils.validators import validate_oracle_spec


class CapfiApplication:
    """Runs one CLI command: loads data, builds oracles, writes reports."""

    def __init__(self, debug: bool = False, log_dir: Optional[Path] = None):
        """Initialize application.

        Args:
            debug: Enable debug mode.
            log_dir: Log directory override.
        """
        self._debug = debug
        self._log_dir = log_dir
        self._init_paths()
        self._init_logging()
        self.oracles: list[Oracle] = []
        logger.info(f"CAPFI {__version__} initialized")

    def _init_paths(self) -> None:
        """Initialize toolkit paths."""
        self.paths = get_app_paths(self._log_dir)

    def _init_logging(self) -> None:
        """Initialize logging."""
        setup_logging(self.paths.log_dir, debug=self._debug)
        logger.info(f"Log directory: {self.paths.log_dir}")

    # ---------------- shared steps ----------------

    def load_dataset(self, config: RunConfig) -> Manifest:
        """Load and validate the run's manifest."""
        return load_manifest(config.dataset)

    def build_oracles(self, config: RunConfig, manifest: Manifest) -> list[Oracle]:
        """Instantiate every ``--oracle`` spec in order.

        A builtin oracle takes its modalities from its own config file and an
        external one announces its layout in the handshake; ``--features``
        only selects what gets permuted.
        """
        oracles: list[Oracle] = []
        self.oracles = oracles
        for spec in config.oracles:
            try:
                kind, target = validate_oracle_spec(spec)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            if kind == "builtin":
                cfg_path = Path(target)
                oracle_config = ConfigManager(cfg_path, BuiltinOracleConfig).load()
                if oracle_config.weights_path is not None and not oracle_config.weights_path.is_absolute():
                    oracle_config = oracle_config.model_copy(
                        update={"weights_path": cfg_path.parent / oracle_config.weights_path}
                    )
                oracle: Oracle = build_builtin_oracle(oracle_config, manifest)
            else:
                oracle = ExternalOracle(target, manifest.dims)
            oracle.check_manifest(manifest)
            oracles.append(oracle)

        names = [o.name for o in oracles]
        if len(set(names)) != len(names):
            raise ConfigError(f"Oracle names must be unique within a run, got {names}")
        return oracles

    def resolve(self, config: RunConfig, manifest: Manifest) -> list[ContextSet]:
        """Expand the context selection; malformed expressions are config errors."""
        try:
            return resolve_contexts(config.contexts, manifest, build_subsets(manifest))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def close(self) -> None:
        """Shut down external oracle processes."""
        for oracle in self.oracles:
            oracle.close()
        self.oracles = []

    # ---------------- commands ----------------

    def cmd_baseline(self, config: RunConfig) -> list[Path]:
        """Metric triple per (oracle, context)."""
        manifest = self.load_dataset(config)
        contexts = self.resolve(config, manifest)
        oracles = self.build_oracles(config, manifest)
        store = ReportStore(config.out)

        rows = []
        for oracle in oracles:
            bound = oracle.bind(manifest)
            for context in contexts:
                if context.cardinality == 0:
                    logger.warning(f"Context {context.notation} is empty; no baseline")
                    continue
                positions = context_rows(manifest, context)
                triple = evaluate(
                    make_batch(context.members, bound.base_scores[positions], manifest.labels[positions])
                )
                rows.append({"model": oracle.name, "context": context.notation, **triple.to_dict()})

        document = {
            "kind": "baseline",
            "toolkit_version": __version__,
            "seed": config.seed,
            "models": [o.metadata.to_dict() for o in oracles],
            "manifest": manifest_summary(manifest),
            "contexts": [{"notation": c.notation, "cardinality": c.cardinality} for c in contexts],
            "baselines": rows,
        }
        written = [store.write_json("baseline_report.json", document)]
        frame = baseline_frame(rows)
        if ExportFormat.TABULAR in config.formats:
            written.append(store.write_table("baseline.csv", frame))
        print(format_table(frame))
        return written

    def cmd_capfi(self, config: RunConfig) -> list[Path]:
        """Full context-aware permutation importance run."""
        manifest = self.load_dataset(config)
        contexts = self.resolve(config, manifest)
        oracles = self.build_oracles(config, manifest)
        features = [m.value for m in parse_modalities(config.features)]
        metrics = [m.value for m in config.metrics]

        report: ImportanceReport = run_full_analysis(
            manifest,
            oracles,
            contexts,
            features,
            seed=config.seed,
            metrics=metrics,
            repetitions=config.engine.repetitions,
            max_workers=config.engine.max_workers,
        )
        store = ReportStore(config.out)
        written = []
        if ExportFormat.STRUCTURED in config.formats:
            written.append(store.write_report(report))
        if ExportFormat.TABULAR in config.formats:
            written.append(store.write_records_table(report.records))
        if ExportFormat.PLOT in config.formats:
            live = [c.notation for c in contexts if c.cardinality > 0]
            written.extend(render_all(report.records, live, features, metrics, config.out / "plots"))

        if report.failures:
            logger.warning(f"{len(report.failures)} cell(s) failed; see 'failures' in the report")
        print(f"{len(report.records)} records, {len(report.failures)} failure(s) -> {config.out}")
        return written

    def cmd_cross(self, config: RunConfig) -> list[Path]:
        """Cross-context swaps; explicit ``source``/``donor`` or the built-in presets."""
        manifest = self.load_dataset(config)
        subsets = build_subsets(manifest)
        metrics = [m.value for m in config.metrics]
        draws = config.engine.repetitions or 1

        if config.source is not None and config.donor is not None:
            expressions = [
                (feature.value, config.source, config.donor)
                for feature in parse_modalities(config.features)
            ]
        else:
            expressions = list(CROSS_CONTEXT_PRESETS)
        try:
            pairs = [
                (feature, subset_algebra(source, manifest, subsets), subset_algebra(donor, manifest, subsets))
                for feature, source, donor in expressions
            ]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        oracles = self.build_oracles(config, manifest)
        results: list[CrossContextResult] = []
        for oracle in oracles:
            bound = oracle.bind(manifest)
            for feature, source, donor in pairs:
                results.append(
                    compute_cross(bound, manifest, feature, source, donor, config.seed, draws, metrics)
                )

        store = ReportStore(config.out)
        document = {
            "kind": "cross",
            "toolkit_version": __version__,
            "seed": config.seed,
            "models": [o.metadata.to_dict() for o in oracles],
            "manifest": manifest_summary(manifest),
            "results": [r.to_dict() for r in results],
        }
        written = [store.write_json("cross_report.json", document)]
        frame = cross_frame(results, metrics)
        if ExportFormat.TABULAR in config.formats:
            written.append(store.write_table("cross.csv", frame))
        print(format_table(frame))
        return written

    def cmd_synth(self, spec_path: Path, out_path: Path, sidecar: bool = False) -> list[Path]:
        """Generate a manifest, write it with its plant check, print cardinalities."""
        spec = ConfigManager(Path(spec_path), GeneratorSpec).load()
        manifest = generate(spec)
        out_path = Path(out_path)
        written = [save_manifest(manifest, out_path, sidecar=sidecar)]
        if sidecar:
            written.append(out_path.with_suffix(".bin"))

        report = plant_check(manifest, spec)
        store = ReportStore(out_path.parent)
        written.append(store.write_json(f"{out_path.stem}.plant.json", {"kind": "plant", **report.to_dict()}))

        print(format_table(cardinality_table(build_subsets(manifest))))
        return written


def run_command(
    command: str,
    config: Optional[RunConfig] = None,
    spec_path: Optional[Path] = None,
    out_path: Optional[Path] = None,
    sidecar: bool = False,
    debug: bool = False,
    log_dir: Optional[Path] = None,
) -> Sequence[Path]:
    """Run one command and always release oracle processes."""
    app = CapfiApplication(debug=debug, log_dir=log_dir)
    try:
        if command == "synth":
            assert spec_path is not None and out_path is not None
            return app.cmd_synth(spec_path, out_path, sidecar)
        assert config is not None
        handler = {
            "baseline": app.cmd_baseline,
            "capfi": app.cmd_capfi,
            "cross": app.cmd_cross,
        }[command]
        return handler(config)
    finally:
        app.close()
