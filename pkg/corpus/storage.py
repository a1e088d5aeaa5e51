"""
Persistência do corpus em diretório.

Layout:
    images/{id}.png   RGB 8 bits
    masks/{id}.png    escala de cinza 8 bits (0 ou 255)
    meta/{id}.json    cena, objetos, caixa, semente, prompt, checksum
    manifest.json     partições, parâmetros do gerador, versão do formato
"""

import hashlib
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from latent_camo.core.exceptions import CorpusLoadError
from latent_camo.domain.scene import Box, SceneRecord
from latent_camo.utils.logger import get_logger
from latent_camo.utils.tensors import from_uint8, to_uint8

FORMAT_VERSION = 1
logger = get_logger(__name__)


def _png_bytes(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(array).save(buffer, format="PNG")
    return buffer.getvalue()


def record_checksum(image_png: bytes, mask_png: bytes) -> str:
    """SHA-256 dos bytes PNG da imagem seguidos dos bytes PNG da máscara."""
    return hashlib.sha256(image_png + mask_png).hexdigest()


def write_corpus(
    records: Iterable[SceneRecord],
    directory: Path,
    manifest: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Grava registros no layout do corpus (escritor único por diretório).

    Args:
        records: Registros a gravar
        directory: Diretório de destino
        manifest: Conteúdo extra do manifesto (partições e parâmetros do gerador)

    Returns:
        Path: O diretório do corpus
    """
    directory = Path(directory)
    for sub in ("images", "masks", "meta"):
        (directory / sub).mkdir(parents=True, exist_ok=True)

    ids: List[str] = []
    for record in records:
        image_png = _png_bytes(to_uint8(record.image))
        mask_png = _png_bytes((record.vehicle_mask > 0).astype(np.uint8) * 255)
        (directory / "images" / f"{record.record_id}.png").write_bytes(image_png)
        (directory / "masks" / f"{record.record_id}.png").write_bytes(mask_png)
        meta = record.metadata()
        meta["checksum"] = record_checksum(image_png, mask_png)
        (directory / "meta" / f"{record.record_id}.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8"
        )
        ids.append(record.record_id)

    content = {"format_version": FORMAT_VERSION, "record_ids": ids}
    content.update(manifest or {})
    (directory / "manifest.json").write_text(
        json.dumps(content, indent=2, sort_keys=True), encoding="utf-8"
    )
    logger.info(f"Corpus gravado em {directory}: {len(ids)} registros")
    return directory


def read_manifest(directory: Path) -> Dict[str, Any]:
    """
    Lê o manifesto do corpus.

    Raises:
        CorpusLoadError: Se o manifesto estiver ausente ou inválido
    """
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise CorpusLoadError(f"Manifesto ausente: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusLoadError(f"Manifesto inválido: {path}: {e}") from e
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CorpusLoadError(f"Versão de formato não suportada em {path}")
    return manifest


def manifest_hash(directory: Path) -> str:
    """SHA-256 do manifesto (proveniência de relatórios)."""
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise CorpusLoadError(f"Manifesto ausente: {path}")
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_png(path: Path, record_id: str) -> bytes:
    if not path.exists():
        raise CorpusLoadError(f"Arquivo ausente para o registro '{record_id}': {path}")
    return path.read_bytes()


def _decode_png(data: bytes, path: Path, record_id: str) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img).copy()
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise CorpusLoadError(f"PNG corrompido no registro '{record_id}': {path}") from e


def _load_record(directory: Path, record_id: str) -> SceneRecord:
    meta_path = directory / "meta" / f"{record_id}.json"
    if not meta_path.exists():
        raise CorpusLoadError(f"Metadados ausentes para o registro '{record_id}': {meta_path}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusLoadError(f"Metadados inválidos no registro '{record_id}': {meta_path}") from e

    image_path = directory / "images" / f"{record_id}.png"
    mask_path = directory / "masks" / f"{record_id}.png"
    image_png = _read_png(image_path, record_id)
    mask_png = _read_png(mask_path, record_id)
    if record_checksum(image_png, mask_png) != meta.get("checksum"):
        raise CorpusLoadError(
            f"Checksum inválido no registro '{record_id}' ({image_path}, {mask_path})"
        )

    image = _decode_png(image_png, image_path, record_id)
    mask = _decode_png(mask_png, mask_path, record_id)
    try:
        return SceneRecord(
            record_id=record_id,
            image=from_uint8(image[..., :3]),
            vehicle_mask=(mask > 127).astype(np.uint8),
            box=Box(*meta["box"]),
            scene_label=meta["scene_label"],
            objects=list(meta["objects"]),
            seed=int(meta["seed"]),
            split=meta.get("split", "train"),
            texture_family=meta.get("texture_family", ""),
            geometry=dict(meta.get("geometry", {})),
        )
    except (KeyError, TypeError) as e:
        raise CorpusLoadError(f"Metadados incompletos no registro '{record_id}': {meta_path}") from e


def read_corpus(directory: Path, split: Optional[str] = None) -> List[SceneRecord]:
    """
    Lê o corpus gravado por `write_corpus`.

    Diretório inexistente ou vazio resulta em corpus vazio.

    Args:
        directory: Diretório do corpus
        split: Filtra uma partição (None = todas)

    Returns:
        List[SceneRecord]: Registros na ordem do manifesto

    Raises:
        CorpusLoadError: Arquivo ausente/corrompido ou checksum inválido (nomeia o registro)
    """
    directory = Path(directory)
    if not directory.exists() or not any(directory.iterdir()):
        return []
    manifest = read_manifest(directory)
    records = [_load_record(directory, rid) for rid in manifest.get("record_ids", [])]
    if split is not None:
        records = [r for r in records if r.split == split]
    logger.debug(f"Corpus lido de {directory}: {len(records)} registros")
    return records
