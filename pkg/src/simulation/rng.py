"""
Flux pseudo-aléatoires rejouables.

Un RngStream est entièrement déterminé par (seed, stream_id, channel):
PCG64 initialisé par SeedSequence(seed, spawn_key=(stream_id, channel)).
Les gaussiennes sont obtenues par la transformation inverse de la fonction
de répartition (scipy.special.ndtri) appliquée à des uniformes sur ]0, 1[,
ce qui rend les tirages identiques d'une plateforme à l'autre et permet de
compter exactement les uniformes consommées.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_UINT64_LIMIT = 2 ** 64

# Les uniformes de numpy sont des multiples de 2^-53 dans [0, 1[;
# ce décalage les place au centre de leur cellule, dans ]0, 1[
_HALF_ULP = 2.0 ** -54
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


class RngStream:
    """
    Flux de tirages d'une réplication.

    Attributes:
        seed: Graine maître (entier 64 bits)
        stream_id: Identifiant du flux (indice de réplication)
        channel: Sous-flux (0: système, 1: politique)
        draws: Nombre d'uniformes consommées depuis la création
    """

    SYSTEM_CHANNEL = 0
    POLICY_CHANNEL = 1

    def __init__(self, seed: int, stream_id: int = 0, channel: int = SYSTEM_CHANNEL):
        for name, value in (("seed", seed), ("stream_id", stream_id), ("channel", channel)):
            if not isinstance(value, (int, np.integer)) or not 0 <= int(value) < _UINT64_LIMIT:
                raise ValueError(f"{name} doit être un entier 64 bits non signé. Reçu: {value!r}")

        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.channel = int(channel)
        self.draws = 0
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, self.channel))
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def child(self, channel: int) -> "RngStream":
        """Sous-flux indépendant de même (seed, stream_id)."""
        return RngStream(self.seed, self.stream_id, channel)

    def uniform(self) -> float:
        """Une uniforme sur [0, 1[."""
        self.draws += 1
        return float(self._generator.random())

    def uniforms(self, size: int) -> np.ndarray:
        """size uniformes sur [0, 1[."""
        self.draws += size
        return self._generator.random(size)

    def normals(self, size: int) -> np.ndarray:
        """size gaussiennes centrées réduites (une uniforme par gaussienne)."""
        return ndtri(np.minimum(self.uniforms(size) + _HALF_ULP, _BELOW_ONE))

    def __repr__(self):
        return (
            f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"channel={self.channel}, draws={self.draws})"
        )
