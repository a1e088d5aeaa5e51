"""
Interface de linha de comando (CLI) do sistema.

Este módulo fornece uma CLI completa para o pipeline de camuflagem:
geração do corpus, treino dos modelos auxiliares e dos estágios, amostragem,
avaliação e relatório. Todos os artefatos vivem sob o diretório `--out`.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import load_dotenv
from PIL import Image

from latent_camo.backend.autoencoder import LatentAutoencoder, psnr, train_autoencoder
from latent_camo.backend.schedule import NoiseSchedule
from latent_camo.core.exceptions import CamouflageError, DataValidationError, NotReadyError, exit_code_for
from latent_camo.core.models import EvalReport
from latent_camo.corpus.generator import corpus_manifest, generate_split
from latent_camo.corpus.storage import manifest_hash, read_corpus, write_corpus
from latent_camo.critic.training import critic_accuracy, train_critic
from latent_camo.detection.inference import detect_boxes
from latent_camo.detection.model import ToyDetector
from latent_camo.detection.serialization import write_detection_sets
from latent_camo.detection.training import train_detector
from latent_camo.domain.scene import SceneRecord
from latent_camo.evaluation.harness import REPORT_JSON, REPORT_TEXT, EvaluationHarness, rebuild_report
from latent_camo.evaluation.report_exporter import ReportExporter, load_report, merge_reports
from latent_camo.optimization.base_trainer import latest_checkpoint
from latent_camo.optimization.denoiser_pretrainer import DenoiserPretrainer
from latent_camo.optimization.factory import TrainerFactory, load_stage_artifacts
from latent_camo.optimization.inference import CamouflageGenerator
from latent_camo.utils.checkpoint import checkpoint_hash
from latent_camo.utils.config import RunConfig
from latent_camo.utils.logger import attach_run_log, get_logger, setup_logger
from latent_camo.utils.tensors import batch_of, tensor_to_image, to_uint8
from latent_camo.utils.workspace import DETECTOR_ROLES, STAGE_SECTIONS, WorkspaceLayout

STAGE_COMMANDS = {"train-stage1": "no_box", "train-stage2": "white_box", "train-onestage": "one_stage"}

logger = get_logger(__name__)


def load_config(args: argparse.Namespace) -> RunConfig:
    """Configuração do arquivo `--config` (ou padrão) com `--seed` aplicado."""
    config = RunConfig.from_json(Path(args.config)) if args.config else RunConfig.default()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def load_split(layout: WorkspaceLayout, split: str) -> List[SceneRecord]:
    records = read_corpus(layout.corpus, split)
    if not records:
        raise DataValidationError(f"Partição '{split}' vazia em {layout.corpus} (execute gen-data)")
    return records


# ----------------------------------------------------------------------
# Subcomandos
# ----------------------------------------------------------------------


def cmd_gen_data(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    records: List[SceneRecord] = []
    for split in ("train", "val", "test"):
        records.extend(generate_split(config.corpus, split, config.seed))
    write_corpus(records, layout.corpus, manifest=corpus_manifest(config.corpus, config.seed))
    logger.info(f"Corpus gravado em {layout.corpus}: {len(records)} registros")


def cmd_train_ae(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    train = load_split(layout, "train")
    model = train_autoencoder(train, config.backend, config.seed, epochs=args.epochs, show_progress=args.progress)
    val = read_corpus(layout.corpus, "val")
    metadata = {"records": len(train)}
    if val:
        batch = batch_of([r.image_tensor() for r in val[:64]])
        metadata["val_psnr_db"] = float(psnr(model.decode(model.encode(batch)), batch).mean())
    model.save(layout.autoencoder, config.config_hash(), metadata)
    logger.info(f"Autoencoder salvo em {layout.autoencoder}: {metadata}")


def cmd_train_critic(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    autoencoder = LatentAutoencoder.load(layout.autoencoder)
    result = train_critic(
        load_split(layout, "train"),
        autoencoder,
        config.critic,
        config.corpus.scene_labels,
        config.seed,
        epochs=args.epochs,
        show_progress=args.progress,
    )
    metadata = {"train_accuracy": result.train_accuracy, "labels": list(result.labels)}
    val = read_corpus(layout.corpus, "val")
    if val:
        metadata["val_accuracy"] = critic_accuracy(
            result.model, autoencoder, val, result.labels, config.critic.selection_threshold
        )
    result.model.save(layout.critic, config.config_hash(), metadata)
    logger.info(f"Crítico salvo em {layout.critic} (acurácia {result.train_accuracy:.3f})")


def cmd_train_detector(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    roles = DETECTOR_ROLES if args.role == "both" else (args.role,)
    train = load_split(layout, "train")
    for role in roles:
        variant = config.detector.white_box_variant if role == "white_box" else config.detector.black_box_variant
        result = train_detector(
            train, variant, config.detector, config.seed + (0 if role == "white_box" else 1),
            epochs=args.epochs, show_progress=args.progress,
        )
        result.model.save(layout.detector(role), config.config_hash(), {"role": role, "final_loss": result.final_loss})
        logger.info(f"Detector '{role}' ({variant}) salvo em {layout.detector(role)}")


def cmd_train_denoiser(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    trainer = DenoiserPretrainer(
        config.backend,
        config.strategy,
        LatentAutoencoder.load(layout.autoencoder),
        NoiseSchedule.from_config(config.backend),
        seed=config.seed,
        config_hash=config.config_hash(),
        iterations=args.iterations,
        show_progress=args.progress,
    )
    result = trainer.train(load_split(layout, "train"), layout.denoiser_base)
    logger.info(f"Denoiser base: {result.checkpoint_dir}")


def cmd_train_stage(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    stage = STAGE_COMMANDS[args.command]
    if args.iterations is not None:
        data = config.to_dict()
        data[STAGE_SECTIONS[stage]]["iterations"] = args.iterations
        config = RunConfig.from_dict(data)
    artifacts = load_stage_artifacts(layout, config, stage)
    trainer = TrainerFactory.create(stage, config, artifacts, show_progress=args.progress)
    result = trainer.train(load_split(layout, "train"), layout.stage_dir(stage))
    logger.info(
        f"Estágio {stage} concluído: {result.steps} passos, checkpoint {result.checkpoint_dir}, "
        f"{len(result.skipped_records)} registro(s) descartado(s)"
    )


def _generator(config: RunConfig, layout: WorkspaceLayout, stage: str, steps: Optional[int]) -> CamouflageGenerator:
    return CamouflageGenerator.from_checkpoints(
        latest_checkpoint(layout.stage_dir(stage)),
        layout.autoencoder,
        config.backend,
        config.strategy,
        steps=steps,
        seed=config.eval.sample_seed,
    )


def cmd_sample(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    generator = _generator(config, layout, args.stage, args.steps)
    records = load_split(layout, args.split)
    if args.record_id:
        records = [r for r in records if r.record_id in set(args.record_id)]
        if not records:
            raise DataValidationError(f"Registros não encontrados na partição '{args.split}': {args.record_id}")
    else:
        records = records[: args.limit]
    out = Path(args.output) if args.output else Path(layout.root) / "samples" / args.stage
    out.mkdir(parents=True, exist_ok=True)
    target = layout.detector("white_box")
    detector = ToyDetector.load(target) if (target / "manifest.json").exists() else None
    detection_sets = []
    for record in records:
        result = generator.generate(record)
        for kind, image in (("camouflaged", result.camouflaged), ("composited", result.composited)):
            Image.fromarray(to_uint8(tensor_to_image(image))).save(out / f"{record.record_id}_{kind}.png")
        message = f"{record.record_id}: {result.latency_s:.3f}s"
        if detector is not None:
            ds = detect_boxes(
                detector,
                result.composited,
                conf_threshold=config.detector.conf_threshold,
                nms_iou=config.detector.nms_iou,
                image_id=record.record_id,
                ground_truth=[record.box.to_xyxy()],
            )
            detection_sets.append(ds)
            message += f", {len(ds.detections)} detecção(ões) acima de {config.detector.conf_threshold}"
        logger.info(message)
    if detector is not None:
        write_detection_sets(out / "detections.jsonl", detection_sets)
    logger.info(f"{len(records)} amostra(s) gravada(s) em {out}")


def _detectors(layout: WorkspaceLayout) -> Dict[str, ToyDetector]:
    detectors = {}
    for role in DETECTOR_ROLES:
        if (layout.detector(role) / "manifest.json").exists():
            detectors[role] = ToyDetector.load(layout.detector(role))
    if "white_box" not in detectors:
        raise NotReadyError(f"Detector alvo ausente: {layout.detector('white_box')} (execute train-detector)")
    return detectors


def _harness(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> EvaluationHarness:
    stage_checkpoint = latest_checkpoint(layout.stage_dir(args.stage))
    provenance = {
        "config_hash": config.config_hash(),
        "corpus_manifest": manifest_hash(layout.corpus),
        "autoencoder": checkpoint_hash(layout.autoencoder),
        f"denoiser:{args.stage}": checkpoint_hash(stage_checkpoint),
    }
    for role in DETECTOR_ROLES:
        if (layout.detector(role) / "manifest.json").exists():
            provenance[f"detector:{role}"] = checkpoint_hash(layout.detector(role))
    attach_run_log(layout.eval)
    return EvaluationHarness(
        _generator(config, layout, args.stage, args.steps),
        config.eval,
        config.detector,
        strategy_name=f"{config.strategy.mode}/{args.stage}",
        out_dir=layout.eval,
        provenance=provenance,
    )


def _write_report(layout: WorkspaceLayout, report: EvalReport) -> None:
    path = layout.eval / REPORT_JSON
    if path.exists():
        report = merge_reports(load_report(path), report)
    exporter = ReportExporter()
    exporter.export_json(report, path)
    exporter.export_table(report, layout.eval / REPORT_TEXT)
    print(exporter.render_table(report), end="")


def cmd_eval(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    harness = _harness(args, config, layout)
    report = harness.evaluate(_detectors(layout), load_split(layout, "test"), load_split(layout, "val"))
    _write_report(layout, report)


def cmd_eval_defense(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    harness = _harness(args, config, layout)
    detectors = _detectors(layout)
    test, val = load_split(layout, "test"), load_split(layout, "val")
    report = EvalReport(provenance=dict(harness.provenance))
    for defense in args.defense or config.eval.defenses:
        report.extend(harness.evaluate_defended("white_box", detectors["white_box"], test, val, defense))
    _write_report(layout, report)


def cmd_eval_transfer(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    harness = _harness(args, config, layout)
    detectors = _detectors(layout)
    n = config.eval.n_backgrounds if args.n_backgrounds is None else args.n_backgrounds
    report = EvalReport(provenance=dict(harness.provenance))
    for detector_id, detector in detectors.items():
        report.extend(
            harness.evaluate_cross_background(
                detector_id, detector, load_split(layout, "test"), load_split(layout, "val"),
                n, config.corpus, config.seed,
            )
        )
    _write_report(layout, report)


def cmd_report(args: argparse.Namespace, config: RunConfig, layout: WorkspaceLayout) -> None:
    report = rebuild_report(layout.eval) if args.rebuild else load_report(layout.eval / REPORT_JSON)
    exporter = ReportExporter()
    if args.rebuild:
        exporter.export_json(report, layout.eval / REPORT_JSON)
        exporter.export_table(report, layout.eval / REPORT_TEXT)
    print(exporter.render_table(report), end="")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-ae": cmd_train_ae,
    "train-critic": cmd_train_critic,
    "train-detector": cmd_train_detector,
    "train-denoiser": cmd_train_denoiser,
    "train-stage1": cmd_train_stage,
    "train-stage2": cmd_train_stage,
    "train-onestage": cmd_train_stage,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "eval-defense": cmd_eval_defense,
    "eval-transfer": cmd_eval_transfer,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latent_camo",
        description="Camuflagem adversarial de veículos em dois estágios (escala de bancada)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exemplos:
  # Pipeline completo
  python -m latent_camo.cli --out work gen-data
  python -m latent_camo.cli --out work train-ae
  python -m latent_camo.cli --out work train-critic
  python -m latent_camo.cli --out work train-detector --role both
  python -m latent_camo.cli --out work train-denoiser
  python -m latent_camo.cli --out work train-stage1
  python -m latent_camo.cli --out work train-stage2
  python -m latent_camo.cli --out work eval

  # Com configuração e semente
  python -m latent_camo.cli --config run.json --seed 7 --out work eval-defense --defense nlm
        """,
    )
    parser.add_argument("--config", type=str, help="Arquivo JSON de configuração")
    parser.add_argument("--seed", type=int, help="Sobrescreve a semente global")
    parser.add_argument("--out", type=str, default="work", help="Diretório de trabalho")
    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Nível de logging (padrão: LATENT_CAMO_LOG_LEVEL ou INFO)",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Equivalente a --log-level DEBUG")
    parser.add_argument("--progress", action="store_true", help="Exibe barras de progresso")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", help="Gera as partições train/val/test do corpus")
    for name, help_text in (("train-ae", "Treina o autoencoder"), ("train-critic", "Treina o crítico latente")):
        sub.add_parser(name, help=help_text).add_argument("--epochs", type=int)
    detector = sub.add_parser("train-detector", help="Treina os detectores de brinquedo")
    detector.add_argument("--role", choices=[*DETECTOR_ROLES, "both"], default="both")
    detector.add_argument("--epochs", type=int)
    sub.add_parser("train-denoiser", help="Pré-treina o denoiser base").add_argument("--iterations", type=int)
    for name in STAGE_COMMANDS:
        sub.add_parser(name, help=f"Treina o estágio {STAGE_COMMANDS[name]}").add_argument("--iterations", type=int)

    sample = sub.add_parser("sample", help="Gera imagens camufladas e compostas (PNG) e as detecções do alvo")
    evals = [
        sample,
        sub.add_parser("eval", help="AP50 limpo vs atacado, SSIM, ASR e latência"),
        sub.add_parser("eval-defense", help="Avaliação com defesas de pré-processamento"),
        sub.add_parser("eval-transfer", help="Recomposição sobre fundos novos da mesma cena"),
    ]
    for p in evals:
        p.add_argument("--stage", choices=list(STAGE_SECTIONS), default="white_box")
        p.add_argument("--steps", type=int, help="Passos de amostragem (padrão: 30 difusão / 28 fluxo)")
    sample.add_argument("--split", choices=["train", "val", "test"], default="test")
    sample.add_argument("--record-id", action="append")
    sample.add_argument("--limit", type=int, default=8)
    sample.add_argument("--output", type=str)
    evals[2].add_argument("--defense", action="append", choices=["none", "nlm", "bilateral"])
    evals[3].add_argument("--n-backgrounds", type=int)
    sub.add_parser("report", help="Exibe o relatório").add_argument(
        "--rebuild", action="store_true", help="Recalcula a partir dos artefatos por imagem"
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Função principal da CLI.

    Returns:
        int: Código de saída (0 sucesso, 2 validação, 3 artefato ausente, 4 falha numérica)
    """
    load_dotenv()
    args = build_parser().parse_args(argv)
    log_level = "DEBUG" if args.verbose else args.log_level
    setup_logger(level=log_level)

    try:
        config = load_config(args)
        layout = WorkspaceLayout(Path(args.out))
        logger.debug(f"Argumentos: {args}")
        COMMANDS[args.command](args, config, layout)
        return 0
    except CamouflageError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return exit_code_for(e)
    except Exception as e:
        logger.exception(f"Erro inesperado: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
