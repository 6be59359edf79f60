"""Unbiased D-ToF path tracing with temporal shift mappings.

The measurement of one pixel is m(T) = int_0^T int f_hat(xbar(t)) * mod(t,
tau) dxbar dt.  We estimate it with pairs of time samples (t_p, t_a): a
primal path traced at t_p and an antithetic path constructed at t_a by a
temporal shift mapping (random replay, path reconnection, or the adaptive
mix).  Both paths' per-prefix contributions are combined with balance
heuristic MIS weights; each completed path prefix carries its own time of
flight and therefore its own modulation phase.

All tracing is wavefront-vectorized over a batch of pixels with numpy.
Throughput, pdf and time-of-flight bookkeeping are scalar (single channel);
RGB albedos are collapsed to their mean on scene load.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT
from .modulation import ModulationConfig, eval_full_product, eval_modulation_term
from .sampling import (KIND_CONTINUATION, KIND_PATH, KIND_TIME, RngStream,
                       sample_time)
from .scene import Hits

TWO_PI = 2.0 * np.pi

# Independent tableau for the second sample of non-antithetic strategies.
KIND_PATH_B = 3

MAT_DIFFUSE, MAT_MIRROR, MAT_ROUGH, MAT_DIELECTRIC = 0, 1, 2, 3


def _orient_normals(tables, prim, normal, d):
    """Flip shading normals against the incident direction.

    Open surfaces (rects, planes) are double-sided for everything except
    dielectrics, which need the geometric orientation to tell entering from
    exiting rays.
    """
    keep = tables.kind[np.maximum(prim, 0)] == MAT_DIELECTRIC
    flip = (np.einsum("ij,ij->i", d, normal) > 0.0) & ~keep
    return np.where(flip[:, None], -normal, normal)

_MAT_CODE = {"diffuse": MAT_DIFFUSE, "mirror": MAT_MIRROR,
             "rough-conductor": MAT_ROUGH, "dielectric": MAT_DIELECTRIC}


@dataclass
class IntegratorConfig:
    """Sampling/mapping configuration for one render."""

    spp: int = 64              # N: total time samples per pixel
    n_t: int = 2               # samples per antithetic group
    strategy: str = "shifted"  # time-sampling strategy
    t_s: float | None = None   # antithetic shift override
    mapping: str = "replay"    # replay | reconnect | adaptive | none
    k_d: int | None = None     # shift-mapping depth limit (default: k_max)
    k_max: int = 4             # maximum bounce depth
    seed: int = 0
    low_pass: bool = True
    precision: int = 64        # accumulation precision (64 or 32 bit)
    tile: int = 32
    workers: int = 1

    def __post_init__(self):
        if self.mapping not in ("replay", "reconnect", "adaptive", "none"):
            raise ValueError(f"unknown mapping {self.mapping!r}")
        if self.spp % self.n_t:
            raise ValueError("spp must be divisible by n_t")
        if self.k_d is None:
            self.k_d = self.k_max
        if self.k_d > self.k_max:
            raise ValueError("k_d must not exceed k_max")
        if self.precision not in (32, 64):
            raise ValueError("accumulation precision must be 32 or 64")


# ---------------------------------------------------------------------------
# scene digest: flat per-primitive material/emitter tables for fast masking


class SceneTables:
    def __init__(self, scene):
        self.scene = scene
        n = len(scene.primitives)
        self.kind = np.zeros(n, dtype=np.int64)
        self.albedo = np.zeros(n)
        self.roughness = np.zeros(n)
        self.ior = np.ones(n)
        self.diffuse_map = np.zeros(n, dtype=bool)
        self.delta = np.zeros(n, dtype=bool)
        self.emission = np.zeros(n)
        for i, p in enumerate(scene.primitives):
            m = p.material
            self.kind[i] = _MAT_CODE[m.kind]
            self.albedo[i] = float(np.mean(m.albedo))
            self.roughness[i] = m.roughness
            self.ior[i] = m.ior
            self.diffuse_map[i] = m.is_diffuse_for_mapping
            self.delta[i] = m.is_delta
        self.point_emitters = [e for e in scene.emitters if e.kind == "point"]
        area = [e for e in scene.emitters if e.kind == "area"]
        if len(area) > 1:
            raise ValueError("at most one area emitter is supported")
        self.area_emitter = area[0] if area else None
        if self.area_emitter is not None:
            self.emission[self.area_emitter.primitive] = float(
                np.mean(self.area_emitter.radiance))


# ---------------------------------------------------------------------------
# shading frame and BSDF models (scalar throughput)


def _basis(n):
    """Orthonormal tangent frame (t, b) for unit normals n."""
    sign = np.where(n[:, 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + n[:, 2])
    b = n[:, 0] * n[:, 1] * a
    t = np.stack([1.0 + sign * n[:, 0] ** 2 * a, sign * b,
                  -sign * n[:, 0]], axis=-1)
    s = np.stack([b, sign + n[:, 1] ** 2 * a, -n[:, 1]], axis=-1)
    return t, s


def _reflect(d, n):
    return d - 2.0 * np.einsum("ij,ij->i", d, n)[:, None] * n


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def _ggx_d(alpha, cos_h):
    a2 = alpha ** 2
    denom = cos_h ** 2 * (a2 - 1.0) + 1.0
    return a2 / np.maximum(np.pi * denom ** 2, 1e-300)


def _ggx_g1(alpha, cos_v):
    a2 = alpha ** 2
    c = np.clip(cos_v, 1e-9, 1.0)
    return 2.0 * c / (c + np.sqrt(a2 + (1.0 - a2) * c ** 2))


def bsdf_eval(tables, prim, n, wi, wo):
    """BSDF value f_r and sampling pdf for non-delta materials.

    ``wi`` is the direction of propagation into the vertex, ``wo`` the
    outgoing direction; both unit, world space.  Delta materials return 0.
    """
    cos_i = _dot(-wi, n)
    cos_o = _dot(wo, n)
    ok = (cos_i > 1e-9) & (cos_o > 1e-9)
    f = np.zeros(len(prim))
    pdf = np.zeros(len(prim))
    kind = tables.kind[prim]
    m = ok & (kind == MAT_DIFFUSE)
    f[m] = tables.albedo[prim[m]] / np.pi
    pdf[m] = cos_o[m] / np.pi
    m = ok & (kind == MAT_ROUGH)
    if np.any(m):
        alpha = tables.roughness[prim[m]] ** 2
        h = -wi[m] + wo[m]
        h /= np.maximum(np.linalg.norm(h, axis=-1, keepdims=True), 1e-300)
        cos_h = np.clip(_dot(h, n[m]), 0.0, 1.0)
        d_h = _ggx_d(alpha, cos_h)
        g = _ggx_g1(alpha, cos_i[m]) * _ggx_g1(alpha, cos_o[m])
        f[m] = (tables.albedo[prim[m]] * d_h * g
                / np.maximum(4.0 * cos_i[m] * cos_o[m], 1e-12))
        doth = np.maximum(_dot(-wi[m], h), 1e-9)
        pdf[m] = d_h * cos_h / (4.0 * doth)
    return f, pdf


def bsdf_sample(tables, prim, n, wi, u1, u2, cur_ior):
    """Sample an outgoing direction; returns (wo, pdf, weight, new_ior).

    ``weight`` is f_r * cos / pdf (the throughput factor).  Delta materials
    report pdf 0 with their discrete weight folded into ``weight``.
    """
    n_l = len(prim)
    wo = np.zeros((n_l, 3))
    pdf = np.zeros(n_l)
    weight = np.zeros(n_l)
    new_ior = cur_ior.copy()
    kind = tables.kind[prim]
    cos_i = _dot(-wi, n)

    m = (kind == MAT_DIFFUSE) & (cos_i > 1e-9)
    if np.any(m):
        r = np.sqrt(u1[m])
        phi = TWO_PI * u2[m]
        t, s = _basis(n[m])
        z = np.sqrt(np.maximum(1.0 - u1[m], 0.0))
        wo[m] = (r * np.cos(phi))[:, None] * t \
            + (r * np.sin(phi))[:, None] * s + z[:, None] * n[m]
        pdf[m] = np.maximum(z, 1e-12) / np.pi
        weight[m] = tables.albedo[prim[m]]

    m = (kind == MAT_MIRROR) & (cos_i > 1e-9)
    if np.any(m):
        wo[m] = _reflect(wi[m], n[m])
        weight[m] = tables.albedo[prim[m]]

    m = (kind == MAT_ROUGH) & (cos_i > 1e-9)
    if np.any(m):
        alpha = tables.roughness[prim[m]] ** 2
        cos_h = np.sqrt((1.0 - u1[m])
                        / np.maximum(u1[m] * (alpha ** 2 - 1.0) + 1.0, 1e-12))
        sin_h = np.sqrt(np.maximum(1.0 - cos_h ** 2, 0.0))
        phi = TWO_PI * u2[m]
        t, s = _basis(n[m])
        h = (sin_h * np.cos(phi))[:, None] * t \
            + (sin_h * np.sin(phi))[:, None] * s + cos_h[:, None] * n[m]
        wo_m = _reflect(wi[m], h)
        cos_o = _dot(wo_m, n[m])
        wo[m] = wo_m
        doth = np.maximum(_dot(-wi[m], h), 1e-9)
        d_h = _ggx_d(alpha, cos_h)
        pdf_m = d_h * cos_h / (4.0 * doth)
        g = _ggx_g1(alpha, cos_i[m]) * _ggx_g1(alpha, np.maximum(cos_o, 0.0))
        f = (tables.albedo[prim[m]] * d_h * g
             / np.maximum(4.0 * cos_i[m] * np.maximum(cos_o, 1e-12), 1e-12))
        ok = cos_o > 1e-9
        pdf[m] = np.where(ok, pdf_m, 0.0)
        weight[m] = np.where(ok, f * cos_o / np.maximum(pdf_m, 1e-300), 0.0)

    m = kind == MAT_DIELECTRIC
    if np.any(m):
        ior = tables.ior[prim[m]]
        entering = cos_i[m] > 0.0
        n_eff = np.where(entering, n[m].T, -n[m].T).T
        eta = np.where(entering, cur_ior[m] / ior, ior / cur_ior[m])
        ci = np.abs(cos_i[m])
        sin2_t = eta ** 2 * (1.0 - ci ** 2)
        tir = sin2_t >= 1.0
        cos_t = np.sqrt(np.maximum(1.0 - sin2_t, 0.0))
        # Fresnel (unpolarized, exact)
        rs = (eta * ci - cos_t) / np.maximum(eta * ci + cos_t, 1e-12)
        rp = (ci - eta * cos_t) / np.maximum(ci + eta * cos_t, 1e-12)
        fr = np.where(tir, 1.0, 0.5 * (rs ** 2 + rp ** 2))
        refl = u1[m] < fr
        wo_r = _reflect(wi[m], n_eff)
        wo_t = (eta[:, None] * wi[m]
                + (eta * ci - cos_t)[:, None] * n_eff)
        wo[m] = np.where(refl[:, None], wo_r, wo_t)
        weight[m] = tables.albedo[prim[m]]
        new_ior[m] = np.where(refl, cur_ior[m],
                              np.where(entering, ior, 1.0))
    return wo, pdf, weight, new_ior


# ---------------------------------------------------------------------------
# primal path tracing with per-prefix records


@dataclass
class Bounce:
    """Everything recorded at one path vertex (vectorized over lanes)."""

    alive: np.ndarray
    prim: np.ndarray
    obj: np.ndarray
    tri: np.ndarray
    pos: np.ndarray
    normal: np.ndarray
    wi: np.ndarray          # unit direction of propagation into the vertex
    th: np.ndarray          # throughput f_hat/p arriving at the vertex
    tau: np.ndarray         # time of flight camera -> vertex (s)
    ior: np.ndarray
    nee_c: np.ndarray       # NEE-completed prefix contribution
    nee_tau: np.ndarray
    emit_c: np.ndarray      # emitter hit by the BSDF ray at this vertex
    emit_tau: np.ndarray
    light_obj: np.ndarray   # area-light sample (object space), for re-eval
    light_valid: np.ndarray
    pdf_w: np.ndarray       # pdf of the sampled outgoing direction
    wo: np.ndarray
    step_w: np.ndarray      # throughput factor f*cos/pdf of the next step
    delta: np.ndarray


@dataclass
class PrimalPath:
    t: np.ndarray
    cam_o: np.ndarray
    cam_d: np.ndarray
    bounces: list


def _nee(scene, tables, pos, normal, wi, prim, th, tau, t, u1, u2):
    """Next-event estimation at a batch of vertices; sums all emitters.

    Returns (contrib, tau_total, light_obj, light_valid). With one area
    emitter the (u1, u2) pair picks the light point; point emitters are
    deterministic.  NEE contributions at delta vertices are zero.
    """
    n_l = len(prim)
    c = np.zeros(n_l)
    tau_out = np.zeros(n_l)
    light_obj = np.zeros((n_l, 3))
    light_valid = np.zeros(n_l, dtype=bool)
    live = ~tables.delta[prim]

    for em in tables.point_emitters:
        lp = scene.point_light_position(em, t)
        seg = lp - pos
        d2 = np.maximum(_dot(seg, seg), 1e-12)
        dist = np.sqrt(d2)
        wl = seg / dist[:, None]
        cos_s = _dot(wl, normal)
        f, _ = bsdf_eval(tables, prim, normal, wi, wl)
        ok = live & (cos_s > 1e-9) & (f > 0.0)
        if np.any(ok):
            occ = np.zeros(n_l, dtype=bool)
            occ[ok] = scene.occluded(pos[ok], lp[ok], t[ok])
            ok &= ~occ
        contrib = np.where(
            ok, th * f * cos_s * float(np.mean(em.intensity)) / d2, 0.0)
        # Per-emitter completions share the vertex prefix; with several
        # emitters the flight times differ, so only the summed single-light
        # case keeps one tau. Scenes bundle one emitter, which is what the
        # estimator exploits here.
        c += contrib
        tau_out = np.where(contrib != 0.0, tau + dist / SPEED_OF_LIGHT,
                           tau_out)

    em = tables.area_emitter
    if em is not None:
        lprim = scene.primitives[em.primitive]
        lpt_obj, pdf_a = lprim.shape.sample(u1, u2)
        lp = lprim.motion.point_to_world(lpt_obj, t)
        ln = lprim.motion.normal_to_world(
            np.broadcast_to(lprim.shape.normal, lpt_obj.shape), t)
        seg = lp - pos
        d2 = np.maximum(_dot(seg, seg), 1e-12)
        dist = np.sqrt(d2)
        wl = seg / dist[:, None]
        cos_s = _dot(wl, normal)
        cos_l = np.abs(_dot(wl, ln))
        f, pdf_b = bsdf_eval(tables, prim, normal, wi, wl)
        ok = live & (cos_s > 1e-9) & (cos_l > 1e-9) & (f > 0.0)
        if np.any(ok):
            occ = np.zeros(n_l, dtype=bool)
            occ[ok] = scene.occluded(pos[ok], lp[ok], t[ok])
            ok &= ~occ
        pdf_nee_w = pdf_a * d2 / np.maximum(cos_l, 1e-12)
        mis = pdf_nee_w / np.maximum(pdf_nee_w + pdf_b, 1e-300)
        rad = float(np.mean(em.radiance))
        contrib = np.where(
            ok, th * f * cos_s * cos_l * rad / (d2 * pdf_a) * mis, 0.0)
        c += contrib
        tau_out = np.where(contrib != 0.0, tau + dist / SPEED_OF_LIGHT,
                           tau_out)
        light_obj = lpt_obj
        light_valid = ok
    return c, tau_out, light_obj, light_valid


def _intersect_active(scene, tables, o, d, t, active):
    """Scene intersection restricted to active lanes (dead lanes miss).

    Lane compaction is exact here because every random draw is addressed by
    its (key, dimension) pair, never by call order.
    """
    n = active.shape[0]
    valid = np.zeros(n, dtype=bool)
    tt = np.full(n, np.inf)
    pos = np.zeros((n, 3))
    nrm = np.zeros((n, 3))
    nrm[:, 2] = 1.0
    prim = np.full(n, -1, dtype=np.int64)
    obj = np.zeros((n, 3))
    tri = np.zeros(n, dtype=np.int64)
    idx = np.nonzero(active)[0]
    if idx.size:
        h = scene.intersect(o[idx], d[idx], t[idx])
        h.normal = _orient_normals(tables, h.prim, h.normal, d[idx])
        valid[idx] = h.valid
        tt[idx] = h.t
        pos[idx] = h.position
        nrm[idx] = h.normal
        prim[idx] = h.prim
        obj[idx] = h.obj_point
        tri[idx] = h.tri
    return Hits(valid, tt, pos, nrm, prim, obj, tri)


def trace_primal(scene, tables, cam_o, cam_d, t, stream: RngStream, k_max):
    """Trace one path per lane at per-lane time t, recording all prefixes."""
    n = cam_o.shape[0]
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,)).copy()
    bounces = []
    o, d = cam_o, cam_d
    th = np.ones(n)
    tau = np.zeros(n)
    ior = np.ones(n)
    alive = np.ones(n, dtype=bool)
    prev_pdf = np.zeros(n)       # pdf of the ray that produced this vertex
    prev_delta = np.ones(n, dtype=bool)  # camera ray: no NEE competitor

    for b in range(k_max):
        hits = _intersect_active(scene, tables, o, d, t, alive)
        alive = alive & hits.valid
        tau = tau + np.where(alive, ior * hits.t / SPEED_OF_LIGHT, 0.0)

        emit_c = np.zeros(n)
        emit_tau = np.zeros(n)
        emitting = alive & (tables.emission[np.maximum(hits.prim, 0)] > 0.0)
        if np.any(emitting):
            cos_l = np.abs(_dot(d, hits.normal))
            d2 = np.maximum(hits.t ** 2, 1e-12)
            if tables.area_emitter is not None:
                lprim = scene.primitives[tables.area_emitter.primitive]
                pdf_a = 1.0 / lprim.shape.area
            else:
                pdf_a = 1.0
            pdf_nee_w = pdf_a * d2 / np.maximum(cos_l, 1e-12)
            mis = np.where(prev_delta, 1.0,
                           prev_pdf / np.maximum(prev_pdf + pdf_nee_w,
                                                 1e-300))
            emit_c = np.where(emitting,
                              th * tables.emission[np.maximum(hits.prim, 0)]
                              * mis, 0.0)
            emit_tau = np.where(emitting, tau, 0.0)

        base = 2 + 5 * b
        u_nee1 = stream.u01(base + 3)
        u_nee2 = stream.u01(base + 4)
        nee_c = np.zeros(n)
        nee_tau = np.zeros(n)
        light_obj = np.zeros((n, 3))
        light_valid = np.zeros(n, dtype=bool)
        idx = np.nonzero(alive)[0]
        if idx.size:
            c, tt, lo, lv = _nee(scene, tables, hits.position[idx],
                                 hits.normal[idx], d[idx],
                                 np.maximum(hits.prim[idx], 0), th[idx],
                                 tau[idx], t[idx], u_nee1[idx], u_nee2[idx])
            nee_c[idx] = c
            nee_tau[idx] = tt
            light_obj[idx] = lo
            light_valid[idx] = lv

        u1 = stream.u01(base + 0)
        u2 = stream.u01(base + 1)
        stream.u01(base + 2)  # reserved third BSDF dim (kept for alignment)
        wo = np.zeros((n, 3))
        pdf_w = np.zeros(n)
        step_w = np.zeros(n)
        new_ior = ior.copy()
        if idx.size:
            wo_s, pdf_s, sw_s, ior_s = bsdf_sample(
                tables, np.maximum(hits.prim[idx], 0), hits.normal[idx],
                d[idx], u1[idx], u2[idx], ior[idx])
            wo[idx] = wo_s
            pdf_w[idx] = pdf_s
            step_w[idx] = sw_s
            new_ior[idx] = ior_s

        bounces.append(Bounce(
            alive=alive.copy(), prim=hits.prim.copy(), obj=hits.obj_point,
            tri=hits.tri, pos=hits.position, normal=hits.normal,
            wi=d.copy(), th=th.copy(), tau=tau.copy(), ior=ior.copy(),
            nee_c=nee_c, nee_tau=nee_tau, emit_c=emit_c, emit_tau=emit_tau,
            light_obj=light_obj, light_valid=light_valid,
            pdf_w=pdf_w, wo=wo, step_w=step_w,
            delta=tables.delta[np.maximum(hits.prim, 0)] & alive))

        alive = alive & (step_w > 0.0)
        if not np.any(alive):
            break
        off = hits.position + 1e-6 * hits.normal * np.sign(
            _dot(wo, hits.normal))[:, None]
        o, d = off, wo
        th = th * step_w
        ior = new_ior
        prev_pdf = pdf_w
        prev_delta = tables.delta[np.maximum(hits.prim, 0)]
    return PrimalPath(t=t, cam_o=cam_o, cam_d=cam_d, bounces=bounces)


def path_contributions(path: PrimalPath):
    """Yield (contribution, tau) arrays for every completed prefix."""
    for b in path.bounces:
        yield b.nee_c, b.nee_tau
        yield b.emit_c, b.emit_tau


def recompute_tau(scene, path: PrimalPath):
    """Rebuild each vertex's tau from vertex positions (bookkeeping check)."""
    taus = []
    prev = path.cam_o
    total = np.zeros(path.cam_o.shape[0])
    for b in path.bounces:
        seg = np.linalg.norm(b.pos - prev, axis=-1)
        total = total + b.ior * seg / SPEED_OF_LIGHT
        taus.append(np.where(b.alive, total, 0.0))
        prev = b.pos
    return taus


# ---------------------------------------------------------------------------
# temporal shift mappings


@dataclass
class MappedPath:
    """Antithetic-side prefix contributions with per-prefix pdf ratios.

    ``r[k]`` is the density ratio p_direct(mapped prefix)/p_mapped used by
    the balance heuristic; replay-only prefixes report r=1, failed prefixes
    r=0 (the primal then takes full weight).
    """

    nee_c: list
    nee_tau: list
    emit_c: list
    emit_tau: list
    r: list


def shift_random_replay(scene, tables, path: PrimalPath, t_a,
                        stream: RngStream, k_max):
    """Re-trace with the identical random tableau at the antithetic time."""
    re = trace_primal(scene, tables, path.cam_o, path.cam_d, t_a, stream,
                      k_max)
    ones = [np.ones(path.cam_o.shape[0]) for _ in re.bounces]
    return MappedPath([b.nee_c for b in re.bounces],
                      [b.nee_tau for b in re.bounces],
                      [b.emit_c for b in re.bounces],
                      [b.emit_tau for b in re.bounces], ones)


def _geom_factor(from_pos, to_pos, to_normal):
    """Solid-angle-to-area conversion |cos at far vertex| / d^2, plus dir."""
    seg = to_pos - from_pos
    d2 = np.maximum(_dot(seg, seg), 1e-300)
    dist = np.sqrt(d2)
    w = seg / dist[:, None]
    return np.abs(_dot(w, to_normal)) / d2, w, dist


def _mapped_nee(scene, tables, pos, normal, wi, prim, th, tau, t_a,
                light_obj, light_valid, pt_valid):
    """Re-evaluate a vertex's NEE completion at the antithetic time.

    Point lights are deterministic; the area-light sample is the primal's
    light point evolved with the light geometry (same area pdf on both
    sides, so it contributes nothing to the MIS density ratio).
    """
    n_l = len(prim)
    c = np.zeros(n_l)
    tau_out = np.zeros(n_l)
    live = ~tables.delta[prim] & pt_valid

    for em in tables.point_emitters:
        lp = scene.point_light_position(em, t_a)
        seg = lp - pos
        d2 = np.maximum(_dot(seg, seg), 1e-12)
        dist = np.sqrt(d2)
        wl = seg / dist[:, None]
        cos_s = _dot(wl, normal)
        f, _ = bsdf_eval(tables, prim, normal, wi, wl)
        ok = live & (cos_s > 1e-9) & (f > 0.0)
        if np.any(ok):
            occ = np.zeros(n_l, dtype=bool)
            occ[ok] = scene.occluded(pos[ok], lp[ok], t_a[ok])
            ok &= ~occ
        contrib = np.where(
            ok, th * f * cos_s * float(np.mean(em.intensity)) / d2, 0.0)
        c += contrib
        tau_out = np.where(contrib != 0.0, tau + dist / SPEED_OF_LIGHT,
                           tau_out)

    em = tables.area_emitter
    if em is not None and np.any(light_valid & live):
        lprim = scene.primitives[em.primitive]
        pdf_a = 1.0 / lprim.shape.area
        lp = lprim.motion.point_to_world(light_obj, t_a)
        ln = lprim.motion.normal_to_world(
            np.broadcast_to(lprim.shape.normal, light_obj.shape), t_a)
        seg = lp - pos
        d2 = np.maximum(_dot(seg, seg), 1e-12)
        dist = np.sqrt(d2)
        wl = seg / dist[:, None]
        cos_s = _dot(wl, normal)
        cos_l = np.abs(_dot(wl, ln))
        f, pdf_b = bsdf_eval(tables, prim, normal, wi, wl)
        ok = live & light_valid & (cos_s > 1e-9) & (cos_l > 1e-9) & (f > 0.0)
        if np.any(ok):
            occ = np.zeros(n_l, dtype=bool)
            occ[ok] = scene.occluded(pos[ok], lp[ok], t_a[ok])
            ok &= ~occ
        pdf_nee_w = pdf_a * d2 / np.maximum(cos_l, 1e-12)
        mis = pdf_nee_w / np.maximum(pdf_nee_w + pdf_b, 1e-300)
        rad = float(np.mean(em.radiance))
        contrib = np.where(
            ok, th * f * cos_s * cos_l * rad / (d2 * pdf_a) * mis, 0.0)
        c += contrib
        tau_out = np.where(contrib != 0.0, tau + dist / SPEED_OF_LIGHT,
                           tau_out)
    return c, tau_out


def shift_reconnect(scene, tables, path: PrimalPath, t_a,
                    stream: RngStream, k_d, adaptive=False):
    """Build the antithetic path by evolving primal vertices with geometry.

    Vertex 1 always comes from re-tracing the camera ray at t_a (the pixel
    coordinate is invariant under the mapping); deeper vertices are evolved
    attached points.  Per step, replay is used instead of reconnection when
    the materials demand it: always for delta vertices, and in adaptive mode
    whenever any of (x_i, x_{i+1}, y_i) is not diffuse.  Steps beyond k_d
    replay with the shared tableau.  Failures (camera hit on a different
    primitive, occlusion, zero throughput) zero the remaining prefixes and
    their density ratio, which routes full MIS weight to the primal.
    """
    n = path.cam_o.shape[0]
    t_a = np.broadcast_to(np.asarray(t_a, dtype=np.float64), (n,)).copy()
    nee_c, nee_tau, emit_c, emit_tau, r_list = [], [], [], [], []
    if not path.bounces:
        return MappedPath(nee_c, nee_tau, emit_c, emit_tau, r_list)

    hits = scene.intersect(path.cam_o, path.cam_d, t_a)
    hits.normal = _orient_normals(tables, hits.prim, hits.normal,
                                  path.cam_d)
    b0 = path.bounces[0]
    alive = b0.alive & hits.valid & (hits.prim == b0.prim)
    y_pos = hits.position
    y_normal = hits.normal
    y_prim = np.maximum(hits.prim, 0)
    y_wi = path.cam_d.copy()
    y_th = np.ones(n)
    y_tau = np.where(alive, hits.t / SPEED_OF_LIGHT, 0.0)
    y_ior = np.ones(n)
    r = np.where(alive, 1.0, 0.0)
    # Primary-ray emitter hit (no pdf ratio: the camera technique is shared).
    e0 = np.where(alive, tables.emission[y_prim], 0.0)

    for b_idx, bn in enumerate(path.bounces):
        # NEE completion at mapped vertex b_idx+1
        c, tt = _mapped_nee(scene, tables, y_pos, y_normal, y_wi, y_prim,
                            y_th, y_tau, t_a, bn.light_obj, bn.light_valid,
                            alive)
        nee_c.append(np.where(alive, c, 0.0))
        nee_tau.append(tt)
        if b_idx == 0:
            emit_c.append(e0)
            emit_tau.append(y_tau.copy())
        r_list.append(np.where(alive, r, 0.0))

        nxt = path.bounces[b_idx + 1] if b_idx + 1 < len(path.bounces) \
            else None
        if nxt is None or not np.any(alive & nxt.alive):
            break

        step_alive = alive & nxt.alive
        # choose reconnection vs replay per lane
        can_recon = step_alive & ~tables.delta[y_prim] \
            & ~tables.delta[np.maximum(bn.prim, 0)] & (bn.pdf_w > 0.0)
        if adaptive:
            can_recon &= (tables.diffuse_map[y_prim]
                          & tables.diffuse_map[np.maximum(bn.prim, 0)]
                          & tables.diffuse_map[np.maximum(nxt.prim, 0)])
        if b_idx >= k_d:
            can_recon[:] = False
        replay = step_alive & ~can_recon

        new_pos = np.zeros((n, 3))
        new_normal = np.zeros((n, 3))
        new_normal[:, 2] = 1.0
        new_prim = np.zeros(n, dtype=np.int64)
        new_wi = np.zeros((n, 3))
        new_th = np.zeros(n)
        new_tau = np.zeros(n)
        new_alive = np.zeros(n, dtype=bool)
        new_emit = np.zeros(n)
        step_r = np.zeros(n)

        if np.any(can_recon):
            idx = np.nonzero(can_recon)[0]
            np_prim = np.maximum(nxt.prim[idx], 0)
            pos_y = scene.evolve_point(nxt.prim[idx], nxt.obj[idx],
                                       t_a[idx])
            prims = [scene.primitives[p] for p in np_prim]
            n_obj = np.zeros((len(idx), 3))
            for k, p in enumerate(np_prim):
                prim = scene.primitives[p]
                if prim.shape.kind == "mesh":
                    n_obj[k] = prim.shape.normal_at_tri(
                        np.atleast_1d(nxt.tri[idx[k]]))[0]
                else:
                    n_obj[k] = prim.shape.normal_at(nxt.obj[idx[k]][None])[0]
            nrm_y = np.zeros((len(idx), 3))
            for k, p in enumerate(np_prim):
                nrm_y[k] = scene.primitives[p].motion.normal_to_world(
                    n_obj[k][None], t_a[idx[k]][None])[0]
            seg_dir = pos_y - y_pos[idx]
            nrm_y = _orient_normals(tables, np_prim, nrm_y, seg_dir)
            g_y, w_y, dist_y = _geom_factor(y_pos[idx], pos_y, nrm_y)
            g_x, _, _ = _geom_factor(bn.pos[idx], nxt.pos[idx],
                                     nxt.normal[idx])
            f_y, pdf_y = bsdf_eval(tables, y_prim[idx], y_normal[idx],
                                   y_wi[idx], w_y)
            cos_at_y = _dot(w_y, y_normal[idx])
            ok = (f_y > 0.0) & (cos_at_y > 1e-9) & (g_x > 1e-300) \
                & (g_y > 0.0)
            if np.any(ok):
                sub = np.nonzero(ok)[0]
                occ = scene.occluded(y_pos[idx[sub]], pos_y[sub],
                                     t_a[idx[sub]])
                ok[sub] &= ~occ
            factor = np.where(
                ok, f_y * cos_at_y * g_y
                / np.maximum(bn.pdf_w[idx] * g_x, 1e-300), 0.0)
            rf = np.where(ok, pdf_y * g_y
                          / np.maximum(bn.pdf_w[idx] * g_x, 1e-300), 0.0)
            sel = idx[ok]
            new_alive[sel] = True
            new_pos[sel] = pos_y[ok]
            new_normal[sel] = nrm_y[ok]
            new_prim[sel] = np_prim[ok]
            new_wi[sel] = w_y[ok]
            new_th[sel] = y_th[sel] * factor[ok]
            new_tau[sel] = y_tau[sel] \
                + y_ior[sel] * dist_y[ok] / SPEED_OF_LIGHT
            step_r[sel] = rf[ok]
            new_emit[sel] = tables.emission[np_prim[ok]]

        if np.any(replay):
            base = 2 + 5 * b_idx
            u1 = stream.u01(base + 0)
            u2 = stream.u01(base + 1)
            wo, pdf_w, step_w, new_ior_all = bsdf_sample(
                tables, y_prim, y_normal, y_wi, u1, u2, y_ior)
            idx = np.nonzero(replay & (step_w > 0.0))[0]
            if idx.size:
                off = y_pos[idx] + 1e-6 * y_normal[idx] * np.sign(
                    _dot(wo[idx], y_normal[idx]))[:, None]
                h = scene.intersect(off, wo[idx], t_a[idx])
                h.normal = _orient_normals(tables, h.prim, h.normal,
                                           wo[idx])
                ok = h.valid
                sel = idx[ok]
                new_alive[sel] = True
                new_pos[sel] = h.position[ok]
                new_normal[sel] = h.normal[ok]
                new_prim[sel] = np.maximum(h.prim[ok], 0)
                new_wi[sel] = wo[sel]
                new_th[sel] = y_th[sel] * step_w[sel]
                new_tau[sel] = y_tau[sel] \
                    + y_ior[sel] * h.t[ok] / SPEED_OF_LIGHT
                step_r[sel] = 1.0
                new_emit[sel] = tables.emission[np.maximum(h.prim[ok], 0)]
                y_ior[sel] = new_ior_all[sel]
                # replay steps keep their own pdf for downstream MIS of
                # emitter hits; reuse pdf_w below via step_pdf
            step_pdf = pdf_w
        else:
            step_pdf = np.zeros(n)

        # emitter hit completion at the new vertex (b_idx+2)
        hit_emit = new_alive & (new_emit > 0.0)
        e_c = np.zeros(n)
        if np.any(hit_emit):
            em = tables.area_emitter
            pdf_a = (1.0 / scene.primitives[em.primitive].shape.area
                     if em is not None else 1.0)
            seg = new_pos - y_pos
            d2 = np.maximum(_dot(seg, seg), 1e-12)
            cos_l = np.abs(_dot(seg / np.sqrt(d2)[:, None], new_normal))
            pdf_nee_w = pdf_a * d2 / np.maximum(cos_l, 1e-12)
            own_pdf = np.where(can_recon, bsdf_eval(
                tables, y_prim, y_normal, y_wi,
                seg / np.maximum(np.sqrt(d2), 1e-300)[:, None])[1],
                step_pdf)
            mis = np.where(tables.delta[y_prim], 1.0,
                           own_pdf / np.maximum(own_pdf + pdf_nee_w, 1e-300))
            e_c = np.where(hit_emit, new_th * new_emit * mis, 0.0)
        emit_c.append(e_c)
        emit_tau.append(np.where(hit_emit, new_tau, 0.0))

        alive = new_alive
        r = np.where(alive, r * step_r, 0.0)
        y_pos, y_normal, y_prim = new_pos, new_normal, new_prim
        y_wi, y_th, y_tau = new_wi, new_th, new_tau

    return MappedPath(nee_c, nee_tau, emit_c, emit_tau, r_list)


def shift_adaptive(scene, tables, path, t_a, stream, k_d):
    return shift_reconnect(scene, tables, path, t_a, stream, k_d,
                           adaptive=True)


# ---------------------------------------------------------------------------
# pair estimation and rendering


def _mod(mod_cfg: ModulationConfig, t, tau, low_pass):
    if low_pass:
        return eval_modulation_term(mod_cfg, t, tau)
    return eval_full_product(mod_cfg, t, tau)


def _pair_estimate(scene, tables, mod_cfg, cfg, pix_idx, px, py, pair):
    """One primal/antithetic pair per lane; returns (dtof, intensity)."""
    T = mod_cfg.T
    tstream = RngStream(cfg.seed, KIND_TIME, pixel=pix_idx, pair=pair)
    tp = sample_time(cfg.strategy, pair % max(cfg.spp // cfg.n_t, 1),
                     cfg.spp // cfg.n_t, tstream, T, t_s=cfg.t_s) \
        if cfg.strategy != "uniform" else \
        sample_time("uniform", 0, 1, tstream, T)
    t_p = np.asarray(tp.t_primal, dtype=np.float64)
    t_a = np.asarray(tp.t_antithetic, dtype=np.float64)
    t_a = np.where(t_a >= T, 0.0, t_a)  # wrap the t_a == T edge case

    pstream = RngStream(cfg.seed, KIND_PATH, pixel=pix_idx, pair=pair)
    # Sub-pixel jitter shares the pair's tableau (dims 0, 1) so the camera
    # ray, and with it the pixel coordinate, is identical for the primal
    # and the mapped antithetic path.
    cam_o, cam_d = scene.camera.generate_rays(px, py, pstream.u01(0),
                                              pstream.u01(1))
    primal = trace_primal(scene, tables, cam_o, cam_d, t_p, pstream,
                          cfg.k_max)

    est = np.zeros(cam_o.shape[0])
    inten = np.zeros(cam_o.shape[0])
    for c, tau in path_contributions(primal):
        inten += c

    if cfg.mapping == "none":
        bstream = RngStream(cfg.seed, KIND_PATH_B, pixel=pix_idx, pair=pair)
        other = trace_primal(scene, tables, cam_o, cam_d, t_a, bstream,
                             cfg.k_max)
        for c, tau in path_contributions(primal):
            est += 0.5 * T * c * _mod(mod_cfg, t_p, tau, cfg.low_pass)
        for c, tau in path_contributions(other):
            est += 0.5 * T * c * _mod(mod_cfg, t_a, tau, cfg.low_pass)
        return est, inten

    if cfg.mapping == "replay":
        if cfg.k_d >= cfg.k_max:
            rstream = RngStream(cfg.seed, KIND_PATH, pixel=pix_idx,
                                pair=pair)
            mapped = shift_random_replay(scene, tables, primal, t_a,
                                         rstream, cfg.k_max)
        else:
            # depth-limited replay: same tableau through k_d, then an
            # independent continuation stream (decorrelates deep bounces)
            rstream = _SplitStream(
                RngStream(cfg.seed, KIND_PATH, pixel=pix_idx, pair=pair),
                RngStream(cfg.seed, KIND_CONTINUATION, pixel=pix_idx,
                          pair=pair), 2 + 5 * cfg.k_d)
            mapped = shift_random_replay(scene, tables, primal, t_a,
                                         rstream, cfg.k_max)
        for c, tau in path_contributions(primal):
            est += 0.5 * T * c * _mod(mod_cfg, t_p, tau, cfg.low_pass)
        for c, tau in zip(mapped.nee_c + mapped.emit_c,
                          mapped.nee_tau + mapped.emit_tau):
            est += 0.5 * T * c * _mod(mod_cfg, t_a, tau, cfg.low_pass)
        return est, inten

    # reconnect / adaptive: balance-heuristic weights from the pdf ratio r
    rstream = RngStream(cfg.seed, KIND_PATH, pixel=pix_idx, pair=pair)
    mapped = shift_reconnect(scene, tables, primal, t_a, rstream, cfg.k_d,
                             adaptive=(cfg.mapping == "adaptive"))
    n_b = len(primal.bounces)
    for k in range(n_b):
        bn = primal.bounces[k]
        r = mapped.r[k] if k < len(mapped.r) else np.zeros_like(bn.nee_c)
        w = 1.0 / (1.0 + r)
        est += w * T * bn.nee_c * _mod(mod_cfg, t_p, bn.nee_tau,
                                       cfg.low_pass)
        est += w * T * bn.emit_c * _mod(mod_cfg, t_p, bn.emit_tau,
                                        cfg.low_pass)
        if k < len(mapped.nee_c):
            est += w * T * mapped.nee_c[k] * _mod(mod_cfg, t_a,
                                                  mapped.nee_tau[k],
                                                  cfg.low_pass)
        if k < len(mapped.emit_c):
            est += w * T * mapped.emit_c[k] * _mod(mod_cfg, t_a,
                                                   mapped.emit_tau[k],
                                                   cfg.low_pass)
    return est, inten


class _SplitStream:
    """Stream that switches from one tableau to another beyond a dimension.

    Used for depth-limited replay: dimensions below the cut reproduce the
    primal tableau, deeper dimensions come from an independent stream.
    """

    def __init__(self, head, tail, cut_dim):
        self.head, self.tail, self.cut = head, tail, cut_dim

    def u01(self, dim):
        return self.head.u01(dim) if dim < self.cut else self.tail.u01(dim)


LANE_TARGET = 16384  # wavefront width: pairs are batched up to this size


def render_tile(scene, tables, mod_cfg, cfg, pix_idx, px, py):
    """Accumulate all pairs for one batch of pixels; returns buffer rows.

    Several pairs are traced in one wavefront (pixels replicated, pair index
    varying per lane) so that small tiles still fill wide numpy batches.
    """
    acc_dtype = np.float64 if cfg.precision == 64 else np.float32
    n = len(pix_idx)
    n_pairs = cfg.spp // cfg.n_t
    s_dtof = np.zeros(n, dtype=acc_dtype)
    s_dtof2 = np.zeros(n, dtype=acc_dtype)
    s_int = np.zeros(n, dtype=acc_dtype)
    chunk = max(1, min(n_pairs, LANE_TARGET // max(n, 1)))
    for start in range(0, n_pairs, chunk):
        k = min(chunk, n_pairs - start)
        pairs = np.repeat(np.arange(start, start + k), n)
        est, inten = _pair_estimate(scene, tables, mod_cfg, cfg,
                                    np.tile(pix_idx, k), np.tile(px, k),
                                    np.tile(py, k), pairs)
        e = est.reshape(k, n)
        s_dtof += e.sum(axis=0).astype(acc_dtype)
        s_dtof2 += (e * e).sum(axis=0).astype(acc_dtype)
        s_int += inten.reshape(k, n).sum(axis=0).astype(acc_dtype)
    dtof = s_dtof / n_pairs
    var = np.maximum(s_dtof2 / n_pairs - dtof ** 2, 0.0) / max(n_pairs, 1)
    # the primal side's throughput is one unbiased intensity sample per pair
    inten = s_int / n_pairs
    return dtof, var, inten


_WORKER_ARGS = None


def _init_worker(scene, tables, mod_cfg, cfg, w, h):
    global _WORKER_ARGS
    _WORKER_ARGS = (scene, tables, mod_cfg, cfg, w, h)


def _run_tile(tile_idx):
    scene, tables, mod_cfg, cfg, w, h = _WORKER_ARGS
    return tile_idx, _tile_result(scene, tables, mod_cfg, cfg, w, h,
                                  tile_idx)


def _tile_result(scene, tables, mod_cfg, cfg, w, h, tile_idx):
    tiles_x = (w + cfg.tile - 1) // cfg.tile
    ty, tx = divmod(tile_idx, tiles_x)
    x0, y0 = tx * cfg.tile, ty * cfg.tile
    xs = np.arange(x0, min(x0 + cfg.tile, w))
    ys = np.arange(y0, min(y0 + cfg.tile, h))
    px, py = np.meshgrid(xs, ys)
    px, py = px.ravel(), py.ravel()
    pix_idx = py * w + px
    return render_tile(scene, tables, mod_cfg, cfg, pix_idx, px, py)


def render(scene, mod_cfg: ModulationConfig, cfg: IntegratorConfig):
    """Render the D-ToF, variance and intensity buffers.

    Deterministic for a fixed seed regardless of worker count: every pixel's
    streams are keyed by its global index and tiles are merged in a fixed
    order.
    """
    w, h = scene.camera.resolution
    tables = SceneTables(scene)
    tiles_x = (w + cfg.tile - 1) // cfg.tile
    tiles_y = (h + cfg.tile - 1) // cfg.tile
    n_tiles = tiles_x * tiles_y
    acc_dtype = np.float64 if cfg.precision == 64 else np.float32
    dtof = np.zeros((h, w), dtype=acc_dtype)
    var = np.zeros((h, w), dtype=acc_dtype)
    inten = np.zeros((h, w), dtype=acc_dtype)

    def store(tile_idx, result):
        ty, tx = divmod(tile_idx, tiles_x)
        x0, y0 = tx * cfg.tile, ty * cfg.tile
        x1, y1 = min(x0 + cfg.tile, w), min(y0 + cfg.tile, h)
        d, v, i = result
        shape = (y1 - y0, x1 - x0)
        dtof[y0:y1, x0:x1] = d.reshape(shape)
        var[y0:y1, x0:x1] = v.reshape(shape)
        inten[y0:y1, x0:x1] = i.reshape(shape)

    if cfg.workers <= 1:
        for tile_idx in range(n_tiles):
            store(tile_idx, _tile_result(scene, tables, mod_cfg, cfg, w, h,
                                         tile_idx))
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(cfg.workers, initializer=_init_worker,
                      initargs=(scene, tables, mod_cfg, cfg, w, h)) as pool:
            for tile_idx, result in pool.imap_unordered(
                    _run_tile, range(n_tiles)):
                store(tile_idx, result)
    return {"dtof": np.asarray(dtof, dtype=np.float32),
            "variance": np.asarray(var, dtype=np.float32),
            "intensity": np.asarray(inten, dtype=np.float32)}


def estimate_pixel(scene, mod_cfg, cfg, x, y):
    """Estimate one pixel with per-pair diagnostics.

    Returns (value, diagnostics) where diagnostics carries the pair
    estimates, their sample variance and the shift-failure rate (fraction of
    pairs whose mapped side contributed nothing while the primal did).
    """
    w, h = scene.camera.resolution
    tables = SceneTables(scene)
    pix_idx = np.array([y * w + x])
    n_pairs = cfg.spp // cfg.n_t
    pair_vals = np.zeros(n_pairs)
    for pair in range(n_pairs):
        est, _ = _pair_estimate(scene, tables, mod_cfg, cfg, pix_idx,
                                np.array([x]), np.array([y]), pair)
        pair_vals[pair] = est[0]
    value = pair_vals.mean()
    diag = {"pair_estimates": pair_vals,
            "pair_variance": pair_vals.var(ddof=1) if n_pairs > 1 else 0.0}
    return value, diag


# ---------------------------------------------------------------------------
# first-order analytic approximation (biased, low noise)


def integrate_linear_cosine(a, b, omega1, theta0, T):
    """Closed form of int_0^T (a + b t) cos(omega1 t + theta0) dt."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    omega1 = np.asarray(omega1, dtype=np.float64)
    theta0 = np.asarray(theta0, dtype=np.float64)
    small = np.abs(omega1) * T < 1e-8
    w = np.where(small, 1.0, omega1)
    s0, c0 = np.sin(theta0), np.cos(theta0)
    sT, cT = np.sin(w * T + theta0), np.cos(w * T + theta0)
    exact = (a * (sT - s0) / w
             + b * ((cT - c0) / w ** 2 + T * sT / w))
    # omega1 -> 0: the integrand degenerates to (a + b t) cos(theta0)
    limit = (a * T + 0.5 * b * T ** 2) * c0
    return np.where(small, limit, exact)


def render_analytic_approx(scene, mod_cfg: ModulationConfig,
                           cfg: IntegratorConfig, order=1):
    """Taylor-model renderer: per path, linearize f_hat and tau over [0, T].

    Each sampled path evolution is evaluated at t=0 and t=T (via random
    replay), finite differences give the linear models f(t) = a + b t and
    tau(t) = tau0 + tau' t, and the time integral is done in closed form.
    Order 0 freezes the amplitude at its t=0 value; both orders keep the
    linear phase (without it there is no Doppler shift at all).  Biased but
    far less noisy than the unbiased estimator.
    """
    if (mod_cfg.sensor_waveform.kind != "sinusoidal"
            or mod_cfg.illum_waveform.kind != "sinusoidal"):
        raise ValueError("analytic approximation requires sinusoids")
    w, h = scene.camera.resolution
    tables = SceneTables(scene)
    T = mod_cfg.T
    dtof = np.zeros((h, w))
    inten = np.zeros((h, w))
    n_paths = max(cfg.spp // 2, 1)
    py_g, px_g = np.mgrid[0:h, 0:w]
    px, py = px_g.ravel(), py_g.ravel()
    pix_idx = py * w + px
    acc = np.zeros(w * h)
    acc_i = np.zeros(w * h)
    for pair in range(n_paths):
        stream = RngStream(cfg.seed, KIND_PATH, pixel=pix_idx, pair=pair)
        cam_o, cam_d = scene.camera.generate_rays(px, py, stream.u01(0),
                                                  stream.u01(1))
        p0 = trace_primal(scene, tables, cam_o, cam_d,
                          np.zeros(w * h), stream, cfg.k_max)
        stream_T = RngStream(cfg.seed, KIND_PATH, pixel=pix_idx, pair=pair)
        pT = trace_primal(scene, tables, cam_o, cam_d,
                          np.full(w * h, T), stream_T, cfg.k_max)
        c0s = list(path_contributions(p0))
        cTs = list(path_contributions(pT))
        for (c0, tau0), (cT, tauT) in zip(c0s, cTs):
            both = (c0 != 0.0) & (cT != 0.0)
            a = c0
            b = np.where(both, (cT - c0) / T, 0.0) if order >= 1 \
                else np.zeros_like(c0)
            tau_rate = np.where(both, (tauT - tau0) / T, 0.0)
            omega1 = mod_cfg.omega_d + mod_cfg.omega_g * tau_rate
            theta0 = mod_cfg.omega_g * tau0 + mod_cfg.psi
            acc += 0.5 * mod_cfg.g1 * integrate_linear_cosine(
                a, b, omega1, theta0, T)
            acc_i += c0
    dtof = (acc / n_paths).reshape(h, w)
    inten = (acc_i / n_paths).reshape(h, w)
    return {"dtof": dtof.astype(np.float32),
            "intensity": inten.astype(np.float32)}
