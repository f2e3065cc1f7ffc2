"""Synthetic lesion scenes: the desk-scale stand-in for real fundus data.

Each scene is a dark circular field of view on black with a smooth
illumination texture, a few bright blobs (exudate-like), a few dark
blobs (hemorrhage-like), and one to four dark vessel-like quadratic
Bezier curves acting as confounders.  A configurable fraction of
lesions is deliberately placed close to a vessel so that heatmaps can
exhibit (and training can suppress) the amplification of confounders
near true lesions.

The referability label is a pure function of the region list: positive
iff the scene has at least one dark lesion or at least two bright ones
(dark/red findings dominate clinical referability, bright ones need
corroboration).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pnm
from .errors import ArgumentError, FormatError
from .tensor import Rng

BRIGHT = "bright-lesion"
DARK = "dark-lesion"
VESSEL = "vessel-confounder"

# channel mixes: lesions and vessels are colored, not gray
_BRIGHT_MIX = np.array([1.00, 0.90, 0.30])
_DARK_MIX = np.array([0.55, 1.00, 0.80])
_VESSEL_MIX = np.array([0.60, 1.00, 0.85])


@dataclass
class SceneConfig:
    size: int = 64
    fov_diameter: int = 56
    base_color: tuple[float, float, float] = (150.0, 95.0, 60.0)
    texture_amp: float = 0.10
    bright_count_probs: tuple[float, ...] = (0.38, 0.29, 0.14, 0.08, 0.05, 0.04, 0.02)
    dark_count_probs: tuple[float, ...] = (0.65, 0.16, 0.09, 0.05, 0.03, 0.01, 0.01)
    vessel_counts: tuple[int, int] = (1, 4)
    bright_radius: tuple[float, float] = (2.0, 4.0)
    dark_radius: tuple[float, float] = (1.8, 3.5)
    bright_amp: tuple[float, float] = (55.0, 90.0)
    dark_amp: tuple[float, float] = (45.0, 75.0)
    vessel_halfwidth: tuple[float, float] = (0.8, 1.5)
    vessel_amp: tuple[float, float] = (35.0, 60.0)
    near_vessel_prob: float = 0.5
    placement_margin: float = 0.82   # lesions stay within this fraction of the radius


@dataclass
class Region:
    kind: str
    center: tuple[float, float]
    radius: float
    mask: np.ndarray
    params: tuple[float, ...]        # serialized geometry (see sidecar format)


@dataclass
class ToyScene:
    image: np.ndarray                # (w, h, 3) uint8
    regions: list[Region]
    label: int


def label_rule(regions) -> int:
    """Referable iff >= 1 dark lesion or >= 2 bright lesions."""
    darks = sum(1 for r in regions if r.kind == DARK)
    brights = sum(1 for r in regions if r.kind == BRIGHT)
    return int(darks >= 1 or brights >= 2)


def _grid(size: int):
    xs = np.arange(size, dtype=np.float64)[:, None]
    ys = np.arange(size, dtype=np.float64)[None, :]
    return xs, ys


def blob_mask(center, radius, size) -> np.ndarray:
    xs, ys = _grid(size)
    return (xs - center[0]) ** 2 + (ys - center[1]) ** 2 <= radius ** 2


def bezier_points(p0, p1, p2, count=160) -> np.ndarray:
    t = np.linspace(0.0, 1.0, count)[:, None]
    return (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t ** 2 * p2


def vessel_distance(points, size) -> np.ndarray:
    """Distance from every pixel to the sampled curve (inf outside the
    curve's bounding box to keep the computation local)."""
    lo = np.clip(np.floor(points.min(axis=0) - 4), 0, size - 1).astype(int)
    hi = np.clip(np.ceil(points.max(axis=0) + 5), 1, size).astype(int)
    dist = np.full((size, size), np.inf)
    xs = np.arange(lo[0], hi[0], dtype=np.float64)
    ys = np.arange(lo[1], hi[1], dtype=np.float64)
    if len(xs) == 0 or len(ys) == 0:
        return dist
    dx = xs[:, None, None] - points[None, None, :, 0]
    dy = ys[None, :, None] - points[None, None, :, 1]
    dist[lo[0]:hi[0], lo[1]:hi[1]] = np.sqrt(dx * dx + dy * dy).min(axis=2)
    return dist


def vessel_mask(p0, p1, p2, halfwidth, size) -> np.ndarray:
    return vessel_distance(bezier_points(p0, p1, p2), size) <= halfwidth + 0.5


def _sample_in_disc(rng, center, max_radius):
    angle = rng.uniform(0, 2 * np.pi)
    rad = max_radius * np.sqrt(rng.random())
    return (center + rad * np.cos(angle), center + rad * np.sin(angle))


def _place_lesion(rng, cfg, radius, vessel_paths, existing):
    """Lesion center: near a random vessel with probability
    near_vessel_prob (within two lesion radii of the curve), otherwise
    uniform in the allowed disc; light rejection keeps lesions apart."""
    c = (cfg.size - 1) / 2.0
    allowed = cfg.placement_margin * cfg.fov_diameter / 2.0 - radius
    for attempt in range(20):
        near = bool(vessel_paths) and rng.random() < cfg.near_vessel_prob
        if near:
            path = vessel_paths[int(rng.integers(0, len(vessel_paths)))]
            anchor = path[int(rng.integers(0, len(path)))]
            angle = rng.uniform(0, 2 * np.pi)
            dist = radius * rng.uniform(1.0, 2.0)
            cand = (anchor[0] + dist * np.cos(angle), anchor[1] + dist * np.sin(angle))
            if np.hypot(cand[0] - c, cand[1] - c) > allowed:
                continue
        else:
            cand = _sample_in_disc(rng, c, allowed)
        if all(np.hypot(cand[0] - e[0], cand[1] - e[1]) > radius + e[2] + 1.0
               for e in existing):
            return cand
    # crowded scene: accept the last candidate, clamped into the disc
    off = np.hypot(cand[0] - c, cand[1] - c)
    if off > allowed:
        cand = (c + (cand[0] - c) * allowed / off, c + (cand[1] - c) * allowed / off)
    return cand


def gen_scene(rng: Rng, cfg: SceneConfig) -> ToyScene:
    size = cfg.size
    xs, ys = _grid(size)
    c = (size - 1) / 2.0
    fov = (xs - c) ** 2 + (ys - c) ** 2 <= (cfg.fov_diameter / 2.0) ** 2

    shade = np.ones((size, size))
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.0, 2)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0, cfg.texture_amp / 3.0)
        shade += amp * np.cos(2 * np.pi * (fx * xs + fy * ys) / size + phase)
    img = shade[:, :, None] * np.asarray(cfg.base_color)[None, None, :]

    regions: list[Region] = []

    n_vessels = int(rng.integers(cfg.vessel_counts[0], cfg.vessel_counts[1] + 1))
    vessel_paths = []
    for _ in range(n_vessels):
        r_fov = cfg.fov_diameter / 2.0
        a0 = rng.uniform(0, 2 * np.pi)
        a2 = a0 + np.pi + rng.uniform(-0.9, 0.9)
        rad0 = r_fov * rng.uniform(0.70, 0.92)
        rad2 = r_fov * rng.uniform(0.70, 0.92)
        p0 = np.array([c + rad0 * np.cos(a0), c + rad0 * np.sin(a0)])
        p2 = np.array([c + rad2 * np.cos(a2), c + rad2 * np.sin(a2)])
        mid = _sample_in_disc(rng, c, 0.5 * r_fov)
        p1 = np.array(mid)
        hw = rng.uniform(*cfg.vessel_halfwidth)
        amp = rng.uniform(*cfg.vessel_amp)
        pts = bezier_points(p0, p1, p2)
        vessel_paths.append(pts)
        dist = vessel_distance(pts, size)
        profile = np.exp(-(dist / hw) ** 2)
        profile[~np.isfinite(dist)] = 0.0
        img -= amp * profile[:, :, None] * _VESSEL_MIX[None, None, :]
        mask = (dist <= hw + 0.5) & fov
        regions.append(Region(kind=VESSEL, center=(float(p1[0]), float(p1[1])),
                              radius=hw,
                              mask=mask,
                              params=(p0[0], p0[1], p1[0], p1[1], p2[0], p2[1], hw, amp)))

    placed: list[tuple[float, float, float]] = []
    n_bright = int(rng.choice(len(cfg.bright_count_probs), p=cfg.bright_count_probs))
    n_dark = int(rng.choice(len(cfg.dark_count_probs), p=cfg.dark_count_probs))
    for kind, count in ((BRIGHT, n_bright), (DARK, n_dark)):
        lo, hi = cfg.bright_radius if kind == BRIGHT else cfg.dark_radius
        amp_rng = cfg.bright_amp if kind == BRIGHT else cfg.dark_amp
        mix = _BRIGHT_MIX if kind == BRIGHT else _DARK_MIX
        sign = 1.0 if kind == BRIGHT else -1.0
        for _ in range(count):
            radius = rng.uniform(lo, hi)
            amp = rng.uniform(*amp_rng)
            center = _place_lesion(rng, cfg, radius, vessel_paths, placed)
            placed.append((center[0], center[1], radius))
            d2 = (xs - center[0]) ** 2 + (ys - center[1]) ** 2
            profile = np.clip(1.0 - d2 / radius ** 2, 0.0, None) ** 1.5
            img += sign * amp * profile[:, :, None] * mix[None, None, :]
            regions.append(Region(kind=kind, center=(float(center[0]), float(center[1])),
                                  radius=float(radius),
                                  mask=blob_mask(center, radius, size) & fov,
                                  params=(center[0], center[1], radius, amp)))

    img = np.clip(img, 0, 255) * fov[:, :, None]
    return ToyScene(image=img.astype(np.uint8), regions=regions,
                    label=label_rule(regions))


def gen_toy_dataset(seed: int, count: int, cfg: SceneConfig | None = None) -> list[ToyScene]:
    """Deterministic list of scenes; scene i depends only on (seed, i)."""
    if count < 1:
        raise ArgumentError(f"scene count must be >= 1, got {count}")
    cfg = cfg or SceneConfig()
    root = Rng(seed)
    return [gen_scene(root.substream("scene", i), cfg) for i in range(count)]


# ---------------------------------------------------------------------------
# on-disk fixtures: PPM image + region-list sidecar + manifest


def _region_line(region: Region) -> str:
    if region.kind == VESSEL:
        head = "vessel"
    else:
        head = "bright" if region.kind == BRIGHT else "dark"
    return head + " " + " ".join(f"{v:.4f}" for v in region.params)


def save_scene(scene: ToyScene, ppm_path, sidecar_path,
               fov_diameter: float | None = None) -> None:
    pnm.write_ppm(ppm_path, scene.image)
    lines = [f"label {scene.label}"]
    if fov_diameter is not None:
        lines.append(f"fov {fov_diameter:.4f}")
    lines += [_region_line(r) for r in scene.regions]
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_scene(ppm_path, sidecar_path) -> ToyScene:
    image = pnm.read_ppm(ppm_path)
    size = image.shape[0]
    xs, ys = _grid(size)
    c = (size - 1) / 2.0
    label = None
    regions: list[Region] = []
    fov = image.astype(np.int64).sum(axis=2) > 0   # fallback when no fov row
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        for raw in fh:
            parts = raw.split()
            if not parts:
                continue
            head, values = parts[0], [float(v) for v in parts[1:]]
            if head == "label":
                label = int(values[0])
            elif head == "fov":
                fov = (xs - c) ** 2 + (ys - c) ** 2 <= (values[0] / 2.0) ** 2
            elif head in ("bright", "dark"):
                cx, cy, radius, amp = values
                kind = BRIGHT if head == "bright" else DARK
                regions.append(Region(kind=kind, center=(cx, cy), radius=radius,
                                      mask=blob_mask((cx, cy), radius, size) & fov,
                                      params=tuple(values)))
            elif head == "vessel":
                x0, y0, x1, y1, x2, y2, hw, amp = values
                mask = vessel_mask(np.array([x0, y0]), np.array([x1, y1]),
                                   np.array([x2, y2]), hw, size) & fov
                regions.append(Region(kind=VESSEL, center=(x1, y1), radius=hw,
                                      mask=mask, params=tuple(values)))
            else:
                raise FormatError(f"unknown sidecar row {head!r}")
    if label is None:
        raise FormatError(f"sidecar {sidecar_path} lacks a label line")
    return ToyScene(image=image, regions=regions, label=label)


def save_dataset(scenes: list[ToyScene], directory,
                 cfg: SceneConfig | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    fov = (cfg or SceneConfig()).fov_diameter
    with open(directory / "manifest.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "file", "label", "n_bright", "n_dark", "n_vessel"])
        for i, scene in enumerate(scenes):
            name = f"scene_{i:05d}"
            save_scene(scene, directory / f"{name}.ppm",
                       directory / f"{name}.regions.txt", fov_diameter=fov)
            writer.writerow([
                i, f"{name}.ppm", scene.label,
                sum(1 for r in scene.regions if r.kind == BRIGHT),
                sum(1 for r in scene.regions if r.kind == DARK),
                sum(1 for r in scene.regions if r.kind == VESSEL),
            ])


def load_dataset(directory) -> list[ToyScene]:
    directory = Path(directory)
    manifest = directory / "manifest.csv"
    if not manifest.exists():
        raise FormatError(f"{directory} has no manifest.csv")
    scenes = []
    with open(manifest, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            name = row["file"].rsplit(".", 1)[0]
            scenes.append(load_scene(directory / row["file"],
                                     directory / f"{name}.regions.txt"))
    return scenes
