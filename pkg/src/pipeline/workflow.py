"""
Discovery Workflow

Stages of the hydride discovery pipeline. Each stage reads the outputs of the
stages before it from the run's output root, writes its own directory and
records the configuration that produced it.
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import json
import logging

import numpy as np
import pandas as pd

from src import __version__
from src.causal import CiTester, fci, neighborhood
from src.chem.composition import parse_formula
from src.cif.parser import write_cif
from src.dataset import (
    DatasetManager,
    SplitSpec,
    apply_training_criteria,
    discretize_frame,
    load_records,
    records_to_frame,
    split_indices,
    synthesize_records,
)
from src.errors import (
    CausalDiscoveryError,
    HydrideDiscoveryError,
    MissingInputError,
    NumericDivergenceError,
)
from src.genvae import (
    FeatureSpace,
    KnnEnergyEstimator,
    TrainingHyperparams,
    VaeArchitecture,
    VaeModel,
    featurize,
    generate,
    leave_one_out,
    load_checkpoint,
    save_checkpoint,
    train,
)
from src.models.material import MaterialRecord
from src.pcr import subset_experiment
from src.scoring import (
    ScoreVariant,
    e_factor,
    e_factor_curve,
    error_stats,
    h_storage_score,
    mae_discrepancy,
    squared_error,
)
from src.screen import (
    FilterConfig,
    ReferenceDatabase,
    ScoredCandidate,
    apply_filters,
    cumulative_accuracy,
    match_classify,
    rank,
    top_k,
)
from src.utils.config import Settings, write_run_config

logger = logging.getLogger(__name__)

STAGES = ("ingest", "score", "causal", "pcr", "train", "generate", "screen", "accuracy", "report")
REFERENCE_ENERGY_COLUMNS = ("e_form_ref", "e_form_dft", "e_form_mp")
FLOAT_FORMAT = "%.10g"


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a frame with fixed float formatting and Unix line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def write_json(payload: Dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_to_builtin) + "\n", encoding="utf-8")
    return path


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingInputError(f"{path} not found; run the '{stage}' stage first")
    return path


class DiscoveryState:
    """State carried through one invocation of the workflow."""

    def __init__(self):
        self.completed: List[str] = []
        self.outputs: Dict[str, List[str]] = {}
        self.metrics: Dict[str, Any] = {}
        self.errors: List[str] = []


class DiscoveryWorkflow:
    """
    Runs the pipeline stages against one output root.

    Stage methods raise on failure; ``run_all`` records the error in the state
    before re-raising so the caller can map it to an exit code.
    """

    def __init__(self, settings: Settings):
        self.settings = settings
        self.state = DiscoveryState()
        self.dataset_manager = DatasetManager(settings)
        self.variant = ScoreVariant(settings.score_variant)

    # paths

    def _dir(self, stage: str) -> Path:
        directory = self.settings.stage_dir(stage)
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    @property
    def records_path(self) -> Path:
        return self.settings.stage_dir("ingest") / "records.jsonl"

    @property
    def training_path(self) -> Path:
        return self.settings.stage_dir("ingest") / "training.jsonl"

    @property
    def split_path(self) -> Path:
        return self.settings.stage_dir("ingest") / "split.csv"

    @property
    def checkpoint_path(self) -> Path:
        return self.settings.stage_dir("train") / "checkpoint.json"

    def _finish(self, stage: str, paths: Sequence[Path], **metrics: Any) -> None:
        directory = self.settings.stage_dir(stage)
        write_run_config(self.settings, directory)
        self.state.completed.append(stage)
        self.state.outputs[stage] = [str(p) for p in paths]
        if metrics:
            self.state.metrics[stage] = metrics
        logger.info(f"Stage '{stage}' wrote {len(paths)} outputs to {directory}")

    def _training_partitions(self) -> Dict[str, List[MaterialRecord]]:
        records = load_records(_require(self.training_path, "ingest"), "json-lines", strict=True)
        split = pd.read_csv(_require(self.split_path, "ingest"), dtype=str)
        by_id = {r.id: r for r in records}
        partitions: Dict[str, List[MaterialRecord]] = {"train": [], "val": [], "test": []}
        for record_id, partition in zip(split["id"], split["partition"]):
            partitions[partition].append(by_id[record_id])
        return partitions

    # stages

    def ingest(self, dataset_path: Optional[Path] = None, synthetic: Optional[int] = None) -> List[MaterialRecord]:
        """
        Load (or synthesize) records, apply the training criteria and split.

        Args:
            dataset_path: CSV or JSON-lines export; defaults to settings.dataset_path
            synthetic: Generate this many synthetic records instead of loading

        Returns:
            Records that passed validation
        """
        directory = self._dir("ingest")
        if synthetic is not None:
            records = synthesize_records(synthetic, seed=self.settings.seed)
        else:
            records = self.dataset_manager.load(dataset_path)

        self.dataset_manager.save(records, self.records_path)
        kept, rejected = apply_training_criteria(records, self.settings.max_sites, self.settings.hull_max)
        self.dataset_manager.save(kept, self.training_path)
        rejected_frame = pd.DataFrame(
            [{"id": r.id, "formula": r.formula_text, "reason": reason} for r, reason in rejected],
            columns=["id", "formula", "reason"],
        )
        write_csv(rejected_frame, directory / "rejected.csv")

        spec = SplitSpec(ratios=self.settings.split_ratios, seed=self.settings.seed)
        parts = split_indices(len(kept), spec)
        split_rows = [
            {"id": kept[i].id, "partition": name}
            for name, indices in zip(("train", "val", "test"), parts)
            for i in indices
        ]
        write_csv(pd.DataFrame(split_rows, columns=["id", "partition"]), self.split_path)

        summary = self.dataset_manager.describe(records)
        summary.update({"training_records": len(kept), "split_sizes": [len(p) for p in parts]})
        write_json(summary, directory / "summary.json")
        self._finish(
            "ingest",
            [self.records_path, self.training_path, self.split_path, directory / "rejected.csv"],
            records=len(records),
            training_records=len(kept),
            split_sizes=[len(p) for p in parts],
        )
        return records

    def score(self, input_path: Optional[Path] = None, stated_mae: Optional[float] = None) -> pd.DataFrame:
        """
        Score records and write E_factor curve data.

        When the records carry a reference formation energy column, squared
        errors and error statistics are written as well.
        """
        directory = self._dir("score")
        path = input_path or _require(self.records_path, "ingest")
        records = load_records(path, strict=self.settings.strict_loading)
        rows = [
            {
                "id": r.id,
                "formula": r.formula_text,
                "e_form": r.e_form,
                "w_h2": r.w_h2,
                "e_factor": e_factor(r.e_form, self.variant),
                "score": h_storage_score(r.e_form, r.w_h2, self.variant),
            }
            for r in records
        ]
        scored = pd.DataFrame(rows, columns=["id", "formula", "e_form", "w_h2", "e_factor", "score"])
        outputs = [write_csv(scored, directory / "scored.csv")]
        curve = pd.DataFrame(
            e_factor_curve(), columns=["e_form", "e_factor_original", "e_factor_modified"]
        )
        outputs.append(write_csv(curve, directory / "e_factor_curve.csv"))

        metrics: Dict[str, Any] = {"records": len(records)}
        reference = next((c for c in REFERENCE_ENERGY_COLUMNS if records and c in records[0].extra), None)
        if reference is not None:
            pairs = [(r.e_form, r.extra[reference]) for r in records if reference in r.extra]
            errors = pd.DataFrame(
                [
                    {"id": r.id, "formula": r.formula_text, "e_form": r.e_form,
                     reference: r.extra[reference],
                     "squared_error": squared_error(r.e_form, r.extra[reference])}
                    for r in records if reference in r.extra
                ]
            )
            outputs.append(write_csv(errors, directory / "squared_errors.csv"))
            stats = error_stats(pairs)
            note = mae_discrepancy(stats, stated_mae, label=Path(path).stem)
            if note:
                logger.warning(note)
            payload = {**stats.model_dump(), "reference_column": reference, "note": note}
            outputs.append(write_json(payload, directory / "error_stats.json"))
            metrics.update(mse=stats.mse, mae=stats.mae)
        self._finish("score", outputs, **metrics)
        return scored

    def _causal_frame(self, records: Sequence[MaterialRecord]) -> pd.DataFrame:
        frame = records_to_frame(records, self.variant)
        columns = self.settings.causal_variable_list
        unknown = [c for c in columns if c not in frame.columns]
        if unknown:
            raise CausalDiscoveryError(f"Unknown causal variables: {unknown}")
        if self.settings.target_variable not in columns:
            raise CausalDiscoveryError(f"Target {self.settings.target_variable!r} is not a causal variable")
        numeric = frame[columns].apply(pd.to_numeric, errors="coerce").dropna()
        if len(numeric) < len(frame):
            logger.warning(f"Causal frame dropped {len(frame) - len(numeric)} incomplete rows")
        if self.settings.ci_test == "chi-square":
            return discretize_frame(
                numeric, columns, self.settings.discretize_bins, self.settings.discretize_strategy
            )
        return numeric

    def causal(self) -> Any:
        """Learn a PAG over the analysis variables and report the target's neighborhood."""
        directory = self._dir("causal")
        records = load_records(_require(self.training_path, "ingest"), "json-lines", strict=True)
        data = self._causal_frame(records)
        tester = CiTester(data, self.settings.ci_test, self.settings.alpha)
        pag = fci(data, self.settings.alpha, self.settings.ci_test, self.settings.max_condition_size, tester)

        pag_path = directory / "pag.txt"
        pag_path.write_text(pag.to_text(), encoding="utf-8")
        annotations = neighborhood(pag, self.settings.target_variable, radius=2)
        neighbors = pd.DataFrame(
            [
                {
                    "node": a.node,
                    "distance": a.distance,
                    "relation": a.relation,
                    "mark_at_target": a.mark_at_target.value if a.mark_at_target else "",
                    "mark_at_node": a.mark_at_node.value if a.mark_at_node else "",
                }
                for a in annotations
            ],
            columns=["node", "distance", "relation", "mark_at_target", "mark_at_node"],
        )
        log = pd.DataFrame(
            [
                {
                    "x": r.x, "y": r.y, "z": "|".join(r.z), "statistic": r.statistic,
                    "p_value": r.p_value, "dof": r.dof, "independent": r.independent,
                }
                for r in tester.log
            ],
            columns=["x", "y", "z", "statistic", "p_value", "dof", "independent"],
        )
        outputs = [
            pag_path,
            write_csv(neighbors, directory / "neighborhood.csv"),
            write_csv(log, directory / "ci_log.csv"),
        ]
        self._finish("causal", outputs, edges=len(list(pag.edges())), ci_tests=len(tester.log))
        return pag

    def pcr(self) -> pd.DataFrame:
        """Compare feature subsets with principal component regression."""
        directory = self._dir("pcr")
        records = load_records(_require(self.training_path, "ingest"), "json-lines", strict=True)
        frame = records_to_frame(records, self.variant)
        spec = SplitSpec(ratios=self.settings.split_ratios, seed=self.settings.seed)
        table = subset_experiment(
            frame, self.settings.pcr_subset_list, spec, self.settings.pcr_variance_threshold
        )
        path = write_csv(table, directory / "pcr_subsets.csv")
        best = table.loc[table["test_mse"].idxmin(), "features"]
        self._finish("pcr", [path], best_subset=best)
        return table

    def _targets(self, records: Sequence[MaterialRecord]) -> np.ndarray:
        return np.array([h_storage_score(r.e_form, r.w_h2, self.variant) for r in records])

    def train(self) -> VaeModel:
        """Fit the feature space on train and validation records, then train the autoencoder."""
        directory = self._dir("train")
        partitions = self._training_partitions()
        train_records, val_records = partitions["train"], partitions["val"] or partitions["train"]
        space = FeatureSpace.fit(train_records + partitions["val"])
        architecture = VaeArchitecture(
            input_dim=space.dim,
            n_counts=space.n_counts,
            latent_dim=self.settings.latent_dim,
            hidden_dim=self.settings.hidden_dim,
            property_hidden_dim=self.settings.property_hidden_dim,
            activation=self.settings.activation,
        )
        hyper = TrainingHyperparams(
            epochs=self.settings.epochs,
            batch_size=self.settings.batch_size,
            learning_rate=self.settings.learning_rate,
            momentum=self.settings.momentum,
            beta=self.settings.beta,
            property_weight=self.settings.property_weight,
        )
        model = VaeModel.initialize(architecture, self.settings.seed)
        encode = lambda rs: space.encode([featurize(r, space) for r in rs])  # noqa: E731
        trained, history = train(
            model,
            encode(train_records),
            encode(val_records),
            hyper,
            seed=self.settings.seed,
            train_targets=self._targets(train_records),
            val_targets=self._targets(val_records),
        )
        outputs = [
            save_checkpoint(trained, space, self.checkpoint_path),
            write_csv(pd.DataFrame(history.rows()), directory / "loss_history.csv"),
        ]
        if history.diverged:
            self._finish("train", outputs, diverged=True)
            raise NumericDivergenceError(f"Training diverged: {history.message}")

        loo_records = train_records + partitions["val"]
        stats, _ = leave_one_out(loo_records, space, k=self.settings.knn_k)
        outputs.append(write_json({**stats.model_dump(), "k": self.settings.knn_k}, directory / "estimator_loo.json"))
        self._finish(
            "train",
            outputs,
            epochs=len(history.val_loss),
            best_epoch=history.best_epoch,
            best_val_loss=min(history.val_loss) if history.val_loss else None,
            estimator_mae=stats.mae,
        )
        return trained

    def generate(self) -> pd.DataFrame:
        """Generate candidates, estimate their formation energies and write CIFs."""
        directory = self._dir("generate")
        model, space = load_checkpoint(_require(self.checkpoint_path, "train"))
        partitions = self._training_partitions()
        reference = partitions["train"] + partitions["val"]
        candidates = generate(
            model,
            space,
            n=self.settings.n_generate,
            seed=self.settings.seed,
            templates=reference,
            steps=self.settings.latent_steps,
            step_size=self.settings.latent_step_size,
            max_step_norm=self.settings.latent_max_step_norm,
        )
        estimator = KnnEnergyEstimator(space, k=self.settings.knn_k).fit(reference)

        cif_dir = directory / "cifs"
        cif_dir.mkdir(exist_ok=True)
        rows = []
        for candidate in candidates:
            e_form = estimator.predict(candidate.vector)
            scored = ScoredCandidate.from_energy(candidate.id, candidate.composition, e_form, self.variant)
            rows.append(
                {
                    "id": candidate.id,
                    "formula": candidate.formula_text,
                    "e_form": e_form,
                    "w_h2": scored.w_h2,
                    "score": scored.score,
                    "predicted_score": candidate.predicted_score,
                    "template_id": candidate.template_id or "",
                }
            )
            if candidate.structure is not None:
                (cif_dir / f"{candidate.id}.cif").write_text(write_cif(candidate.structure), encoding="utf-8")
        table = pd.DataFrame(
            rows, columns=["id", "formula", "e_form", "w_h2", "score", "predicted_score", "template_id"]
        )
        path = write_csv(table, directory / "candidates.csv")
        self._finish("generate", [path, cif_dir], candidates=len(table), estimator=estimator.implementation_id)
        return table

    def _load_candidates(self) -> List[ScoredCandidate]:
        path = _require(self.settings.stage_dir("generate") / "candidates.csv", "generate")
        frame = pd.read_csv(path, dtype={"id": str, "formula": str, "template_id": str}, keep_default_na=False)
        return [
            ScoredCandidate(
                id=row.id,
                composition=parse_formula(row.formula),
                e_form=float(row.e_form),
                w_h2=float(row.w_h2),
                score=float(row.score),
                predicted_score=float(row.predicted_score),
                template_id=row.template_id or None,
            )
            for row in frame.itertuples(index=False)
        ]

    def screen(self) -> List[ScoredCandidate]:
        """Filter, rank and keep the top candidates."""
        directory = self._dir("screen")
        candidates = self._load_candidates()
        verdicts = apply_filters(
            ((c.id, c.composition) for c in candidates),
            FilterConfig.from_settings(self.settings),
            scores={c.id: c.score for c in candidates},
        )
        verdict_frame = pd.DataFrame(
            [v.model_dump() for v in verdicts],
            columns=["candidate_id", "formula", "kept", "failed_rule", "detail"],
        )
        kept_ids = {v.candidate_id for v in verdicts if v.kept}
        ranked = rank([c for c in candidates if c.id in kept_ids])
        selected = top_k(ranked, self.settings.top_k)

        def ranked_frame(items: Sequence[ScoredCandidate]) -> pd.DataFrame:
            return pd.DataFrame(
                [
                    {"rank": i + 1, "id": c.id, "formula": c.formula, "e_form": c.e_form,
                     "w_h2": c.w_h2, "score": c.score}
                    for i, c in enumerate(items)
                ],
                columns=["rank", "id", "formula", "e_form", "w_h2", "score"],
            )

        outputs = [
            write_csv(verdict_frame, directory / "verdicts.csv"),
            write_csv(ranked_frame(ranked), directory / "ranked.csv"),
            write_csv(ranked_frame(selected), directory / "top_k.csv"),
        ]
        rule_counts = verdict_frame["failed_rule"].dropna().value_counts().sort_index()
        self._finish(
            "screen",
            outputs,
            screened=len(verdicts),
            kept=len(ranked),
            top_k=len(selected),
            rejected_by_rule={str(k): int(v) for k, v in rule_counts.items()},
        )
        return selected

    def _reference_db(self, reference_path: Optional[Path]) -> ReferenceDatabase:
        path = reference_path or self.settings.reference_db_path
        if path is not None:
            return ReferenceDatabase.from_csv(Path(path))
        records = load_records(_require(self.records_path, "ingest"), "json-lines", strict=True)
        return ReferenceDatabase.from_records(records)

    def accuracy(self, reference_path: Optional[Path] = None) -> pd.DataFrame:
        """Match the ranked selection against the reference database."""
        directory = self._dir("accuracy")
        top = pd.read_csv(
            _require(self.settings.stage_dir("screen") / "top_k.csv", "screen"),
            dtype={"id": str, "formula": str},
        )
        db = self._reference_db(reference_path)
        compositions = [parse_formula(f) for f in top["formula"]]
        classes = [match_classify(c, db) for c in compositions]
        matches = pd.DataFrame(
            {
                "rank": top["rank"],
                "id": top["id"],
                "formula": top["formula"],
                "match": [c.value.value for c in classes],
                "matched_id": [c.matched_id or "" for c in classes],
            }
        )
        outputs = [write_csv(matches, directory / "matches.csv")]
        metrics: Dict[str, Any] = {"candidates": len(classes)}
        if classes:
            curve = cumulative_accuracy(compositions, db)
            outputs.append(write_csv(curve, directory / "accuracy_curve.csv"))
            at = curve.iloc[min(20, len(curve)) - 1]
            metrics["rates_at_n"] = {
                "n": int(at["n"]),
                "same_formula": float(at["same_formula_rate"]),
                "same_ratio": float(at["same_ratio_rate"]),
                "same_elements": float(at["same_elements_rate"]),
            }
        else:
            logger.warning("No candidates survived screening; accuracy curve not written")
        self._finish("accuracy", outputs, **metrics)
        return matches

    def report(self) -> Dict[str, Any]:
        """Consolidate stage outputs into report.json and report.md."""
        directory = self._dir("report")
        report: Dict[str, Any] = {"version": __version__, "seed": self.settings.seed, "stages": {}}
        for stage in STAGES[:-1]:
            stage_dir = self.settings.stage_dir(stage)
            if not stage_dir.exists():
                continue
            entry: Dict[str, Any] = {"files": sorted(p.name for p in stage_dir.iterdir())}
            for name in ("summary.json", "error_stats.json", "estimator_loo.json"):
                if (stage_dir / name).exists():
                    entry[name[:-5]] = json.loads((stage_dir / name).read_text(encoding="utf-8"))
            report["stages"][stage] = entry

        pcr_path = self.settings.stage_dir("pcr") / "pcr_subsets.csv"
        if pcr_path.exists():
            table = pd.read_csv(pcr_path)
            report["pcr"] = table[["features", "k", "train_mse", "test_mse"]].to_dict(orient="records")
        neighbors_path = self.settings.stage_dir("causal") / "neighborhood.csv"
        if neighbors_path.exists():
            report["neighborhood"] = pd.read_csv(neighbors_path, keep_default_na=False).to_dict(orient="records")
        top_path = self.settings.stage_dir("screen") / "top_k.csv"
        if top_path.exists():
            report["top_candidates"] = pd.read_csv(top_path).head(10).to_dict(orient="records")
        curve_path = self.settings.stage_dir("accuracy") / "accuracy_curve.csv"
        if curve_path.exists():
            curve = pd.read_csv(curve_path)
            report["accuracy_at_20"] = curve.iloc[min(20, len(curve)) - 1].to_dict()

        json_path = write_json(report, directory / "report.json")
        md_path = directory / "report.md"
        md_path.write_text(_render_markdown(report), encoding="utf-8")
        self._finish("report", [json_path, md_path])
        return report

    def run_all(self, dataset_path: Optional[Path] = None, synthetic: Optional[int] = None) -> DiscoveryState:
        """Run every stage in order; stops at the first failing stage."""
        steps: List[Tuple[str, Callable[[], Any]]] = [
            ("ingest", lambda: self.ingest(dataset_path, synthetic)),
            ("score", self.score),
            ("causal", self.causal),
            ("pcr", self.pcr),
            ("train", self.train),
            ("generate", self.generate),
            ("screen", self.screen),
            ("accuracy", self.accuracy),
            ("report", self.report),
        ]
        for name, step in steps:
            try:
                logger.info(f"Running stage '{name}'")
                step()
            except HydrideDiscoveryError as e:
                logger.error(f"Stage '{name}' failed: {e}")
                self.state.errors.append(f"{name}: {e}")
                raise
        return self.state


def _render_markdown(report: Dict[str, Any]) -> str:
    lines = [f"# Hydride discovery run (seed {report['seed']}, version {report['version']})", ""]
    if "pcr" in report:
        lines += ["## Feature subsets", "", "| features | k | train MSE | test MSE |", "|---|---|---|---|"]
        lines += [
            f"| {row['features']} | {row['k']} | {row['train_mse']:.3e} | {row['test_mse']:.3e} |"
            for row in report["pcr"]
        ]
        lines.append("")
    if "neighborhood" in report:
        lines += ["## Neighborhood of the target", ""]
        lines += [f"- {row['node']} ({row['relation']}, distance {row['distance']})" for row in report["neighborhood"]]
        lines.append("")
    if "top_candidates" in report:
        lines += ["## Top candidates", "", "| rank | formula | E_form | W_H2 | score |", "|---|---|---|---|---|"]
        lines += [
            f"| {row['rank']} | {row['formula']} | {row['e_form']:.3f} | {row['w_h2']:.3f} | {row['score']:.3f} |"
            for row in report["top_candidates"]
        ]
        lines.append("")
    if "accuracy_at_20" in report:
        at = report["accuracy_at_20"]
        lines += [
            "## Reference matches",
            "",
            f"At n = {int(at['n'])}: same formula {at['same_formula_rate']:.2f}, "
            f"same ratio {at['same_ratio_rate']:.2f}, same elements {at['same_elements_rate']:.2f}",
            "",
        ]
    return "\n".join(lines)
