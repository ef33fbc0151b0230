"""Random network topologies and channel realizations.

Transmitters and eavesdroppers are dropped uniformly in a disc of radius
``r_circ``; each receiver sits at a fixed distance ``d_link`` from its
transmitter at a random bearing (re-drawn until it lands inside the disc).
Channel entries are i.i.d. circularly-symmetric complex Gaussian with
per-entry variance ``d**-path_loss_exp``. Powers are expressed in dBm and
converted to linear units of the noise floor (0 dBm maps to 1.0).
"""

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionError

_REJECTION_CAP = 10_000


def dbm_to_linear(p_dbm):
    """Convert dBm to linear power in units of the 0 dBm noise floor."""
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def _per_link(value, count, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(count, arr[0])
    if arr.size != count:
        raise ConfigError(f"{name}: expected scalar or {count} values, got {arr.size}")
    return arr


@dataclass(frozen=True)
class NetworkConfig:
    """Geometry, antenna counts and power budgets of one network scenario."""

    num_links: int
    num_eves: int
    r_circ: float = 30.0
    d_link: float = 10.0
    path_loss_exp: float = 2.5
    n_tx: tuple = (3,)
    n_rx: tuple = (2,)
    n_eve: tuple = (2,)
    power_dbm: tuple = (40.0,)
    noise_dbm: float = 0.0

    def __post_init__(self):
        if self.num_links < 1:
            raise ConfigError(f"num_links must be >= 1, got {self.num_links}")
        if self.num_eves < 1:
            raise ConfigError(f"num_eves must be >= 1, got {self.num_eves}")
        for name in ("r_circ", "d_link", "path_loss_exp"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_link > 2 * self.r_circ:
            raise ConfigError(
                f"d_link={self.d_link} exceeds the disc diameter {2 * self.r_circ}"
            )
        for name, count in (("n_tx", self.num_links), ("n_rx", self.num_links),
                            ("n_eve", self.num_eves)):
            vals = _per_link(getattr(self, name), count, name)
            if np.any(vals < 1) or np.any(vals != np.round(vals)):
                raise ConfigError(f"{name} entries must be positive integers")
            object.__setattr__(self, name, tuple(int(v) for v in vals))
        object.__setattr__(
            self, "power_dbm",
            tuple(float(v) for v in _per_link(self.power_dbm, self.num_links, "power_dbm")),
        )

    @property
    def powers_linear(self):
        """Per-link budgets in linear units of the noise floor."""
        return dbm_to_linear(np.asarray(self.power_dbm)) / dbm_to_linear(self.noise_dbm)


@dataclass(frozen=True)
class Topology:
    """Node positions in meters; link i is tx_pos[i] -> rx_pos[i]."""

    tx_pos: np.ndarray  # (Q, 2)
    rx_pos: np.ndarray  # (Q, 2)
    eve_pos: np.ndarray  # (K, 2)

    def to_dict(self):
        return {
            "tx_pos": self.tx_pos.tolist(),
            "rx_pos": self.rx_pos.tolist(),
            "eve_pos": self.eve_pos.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tx_pos=np.asarray(d["tx_pos"], dtype=float),
            rx_pos=np.asarray(d["rx_pos"], dtype=float),
            eve_pos=np.asarray(d["eve_pos"], dtype=float),
        )


@dataclass(frozen=True)
class ChannelSet:
    """All channel matrices of one realization plus the noise normalization.

    ``h[r][q]`` is the (n_rx[q] x n_tx[r]) channel from transmitter r to
    receiver q; ``g[q][k]`` is the (n_eve[k] x n_tx[q]) channel from
    transmitter q to eavesdropper k.
    """

    h: tuple
    g: tuple
    noise_power_linear: float
    powers_linear: np.ndarray

    @property
    def num_links(self):
        return len(self.h)

    @property
    def num_eves(self):
        return len(self.g[0])

    @property
    def n_tx(self):
        return tuple(self.h[q][0].shape[1] for q in range(self.num_links))

    @property
    def n_rx(self):
        return tuple(self.h[0][q].shape[0] for q in range(self.num_links))

    @property
    def n_eve(self):
        return tuple(self.g[0][k].shape[0] for k in range(self.num_eves))

    def to_dict(self):
        def cmat(m):
            return [[[float(x.real), float(x.imag)] for x in row] for row in m]

        return {
            "h": [[cmat(self.h[r][q]) for q in range(self.num_links)] for r in range(self.num_links)],
            "g": [[cmat(self.g[q][k]) for k in range(self.num_eves)] for q in range(self.num_links)],
            "noise_power_linear": self.noise_power_linear,
            "powers_linear": self.powers_linear.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        def mat(entries):
            return np.array([[complex(re, im) for re, im in row] for row in entries])

        h = tuple(tuple(mat(m) for m in row) for row in d["h"])
        g = tuple(tuple(mat(m) for m in row) for row in d["g"])
        return cls(h=h, g=g, noise_power_linear=float(d["noise_power_linear"]),
                   powers_linear=np.asarray(d["powers_linear"], dtype=float))


def _rng_from(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


def _uniform_disc(rng, count, radius):
    r = radius * np.sqrt(rng.uniform(size=count))
    ang = rng.uniform(0.0, 2 * np.pi, size=count)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def sample_topology(cfg: NetworkConfig, seed) -> Topology:
    """Draw a random topology for cfg. Deterministic for a fixed seed
    (plain integer or a SeedSequence)."""
    rng = _rng_from(seed)
    tx = _uniform_disc(rng, cfg.num_links, cfg.r_circ)
    eve = _uniform_disc(rng, cfg.num_eves, cfg.r_circ)
    rx = np.empty_like(tx)
    for q in range(cfg.num_links):
        for _ in range(_REJECTION_CAP):
            ang = rng.uniform(0.0, 2 * np.pi)
            cand = tx[q] + cfg.d_link * np.array([np.cos(ang), np.sin(ang)])
            if np.hypot(*cand) <= cfg.r_circ:
                rx[q] = cand
                break
        else:
            raise ConfigError(
                f"could not place receiver {q} inside the disc after {_REJECTION_CAP} tries"
            )
    return Topology(tx_pos=tx, rx_pos=rx, eve_pos=eve)


def sample_channels(topo: Topology, cfg: NetworkConfig, seed) -> ChannelSet:
    """Draw one Rayleigh channel realization over a topology.

    Entry variance is d**-alpha for the corresponding Tx->Rx / Tx->Eve
    distance; deterministic for a fixed seed.
    """
    if topo.tx_pos.shape[0] != cfg.num_links or topo.eve_pos.shape[0] != cfg.num_eves:
        raise DimensionError("topology does not match the network configuration")
    rng = _rng_from(seed)
    alpha = cfg.path_loss_exp

    def draw(rows, cols, dist):
        scale = dist ** (-alpha / 2.0)
        re = rng.standard_normal((rows, cols))
        im = rng.standard_normal((rows, cols))
        return scale * (re + 1j * im) / np.sqrt(2.0)

    h = tuple(
        tuple(
            draw(cfg.n_rx[q], cfg.n_tx[r], np.linalg.norm(topo.tx_pos[r] - topo.rx_pos[q]))
            for q in range(cfg.num_links)
        )
        for r in range(cfg.num_links)
    )
    g = tuple(
        tuple(
            draw(cfg.n_eve[k], cfg.n_tx[q], np.linalg.norm(topo.tx_pos[q] - topo.eve_pos[k]))
            for k in range(cfg.num_eves)
        )
        for q in range(cfg.num_links)
    )
    return ChannelSet(
        h=h,
        g=g,
        noise_power_linear=float(dbm_to_linear(cfg.noise_dbm)),
        powers_linear=cfg.powers_linear,
    )


def save_instance(path, topo: Topology, channels: ChannelSet):
    """Write a topology plus channel realization as JSON (complex as [re, im])."""
    with open(path, "w") as fh:
        json.dump({"topology": topo.to_dict(), "channels": channels.to_dict()}, fh)


def load_instance(path):
    with open(path) as fh:
        d = json.load(fh)
    return Topology.from_dict(d["topology"]), ChannelSet.from_dict(d["channels"])
