"""
Configuration centralisée du simulateur de systèmes affines à sauts markoviens.

Ce fichier contient toutes les constantes numériques et les valeurs par défaut
des politiques et du harnais d'expériences, permettant une modification facile
des réglages sans changer le code métier.
"""

# ============================================================================
# TOLÉRANCES NUMÉRIQUES
# ============================================================================

# Rang colonne plein: plus petite valeur singulière > RANK_TOL * plus grande
RANK_TOL = 1e-9

# Tolérance sur la somme de chaque ligne de la matrice de transition
STOCHASTIC_TOL = 1e-12

# Conditionnement maximal accepté pour les résolutions linéaires
CONDITION_LIMIT = 1e12

# Résidu relatif maximal des conditions du premier ordre
FOC_TOL = 1e-8

# ============================================================================
# GAINS MSPSA
# ============================================================================

# a_t = gamma / (N + t)
DEFAULT_STEP_OFFSET = 10

# c_t = gamma' / (N' + t)^0.25
DEFAULT_PERTURBATION_GAIN = 1.0
DEFAULT_PERTURBATION_OFFSET = 0
PERTURBATION_EXPONENT = 0.25

# Borne inférieure sigma des valeurs propres du mélange; gamma = 1 / (8 sigma)
DEFAULT_SIGMA_LOWER = 0.5

# ============================================================================
# MOINDRES CARRÉS GLOUTONS
# ============================================================================

# Perturbation relative de l'entrée initiale pendant l'initialisation
LSE_PERTURBATION = 0.05

# ============================================================================
# ORACLE PAR GRILLE
# ============================================================================

# Dimension maximale pour la recherche exhaustive
BRUTE_FORCE_MAX_DIM = 3

# Pas final de la grille raffinée
BRUTE_FORCE_STEP = 1e-4

# Points par coordonnée à chaque niveau de raffinement
BRUTE_FORCE_POINTS = 41

# Demi-largeur (en pas) de la fenêtre conservée d'un niveau au suivant
BRUTE_FORCE_ZOOM_STEPS = 4

# ============================================================================
# HARNAIS D'EXPÉRIENCES
# ============================================================================

# Nombre de points de la grille log-espacée des CSV de courbes
DEFAULT_CHECKPOINT_COUNT = 30

# Fenêtre d'ajustement des pentes log-log: dernière décade [T/10, T]
SLOPE_WINDOW_FRACTION = 0.1

# Niveau de confiance des intervalles sur les pentes
SLOPE_CONFIDENCE = 0.95

# Horizon maximal accepté pour un épisode
MAX_HORIZON = 10**8

# Variable d'environnement surchargeant le répertoire de sortie
OUT_DIR_ENV_VAR = "MSPSA_OUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

# Version inscrite dans la provenance des résumés
CODE_VERSION = "1.0.0"

# ============================================================================
# VALIDATIONS GLOBALES
# ============================================================================

def validate_config() -> bool:
    """
    Valide la cohérence globale de la configuration.

    Returns:
        True si la configuration est valide

    Raises:
        ValueError: Si la configuration est incohérente
    """
    for name, value in (
        ("RANK_TOL", RANK_TOL),
        ("STOCHASTIC_TOL", STOCHASTIC_TOL),
        ("FOC_TOL", FOC_TOL),
        ("BRUTE_FORCE_STEP", BRUTE_FORCE_STEP),
        ("DEFAULT_PERTURBATION_GAIN", DEFAULT_PERTURBATION_GAIN),
        ("DEFAULT_SIGMA_LOWER", DEFAULT_SIGMA_LOWER),
    ):
        if not value > 0:
            raise ValueError(f"{name} doit être strictement positif (reçu: {value})")

    if CONDITION_LIMIT <= 1:
        raise ValueError(f"CONDITION_LIMIT doit être > 1 (reçu: {CONDITION_LIMIT})")

    if DEFAULT_STEP_OFFSET < 0 or DEFAULT_PERTURBATION_OFFSET < 0:
        raise ValueError("Les décalages N et N' des gains doivent être positifs ou nuls")

    if not 0 < LSE_PERTURBATION < 1:
        raise ValueError(f"LSE_PERTURBATION doit être dans ]0, 1[ (reçu: {LSE_PERTURBATION})")

    # Chaque niveau doit réduire le pas, sinon le raffinement ne termine pas
    if BRUTE_FORCE_POINTS - 1 <= 2 * BRUTE_FORCE_ZOOM_STEPS:
        raise ValueError(
            f"BRUTE_FORCE_POINTS ({BRUTE_FORCE_POINTS}) trop faible pour une fenêtre "
            f"de {BRUTE_FORCE_ZOOM_STEPS} pas"
        )

    if not 0 < SLOPE_WINDOW_FRACTION < 1:
        raise ValueError(f"SLOPE_WINDOW_FRACTION doit être dans ]0, 1[ (reçu: {SLOPE_WINDOW_FRACTION})")

    if not 0 < SLOPE_CONFIDENCE < 1:
        raise ValueError(f"SLOPE_CONFIDENCE doit être dans ]0, 1[ (reçu: {SLOPE_CONFIDENCE})")

    if DEFAULT_CHECKPOINT_COUNT < 2:
        raise ValueError("DEFAULT_CHECKPOINT_COUNT doit valoir au moins 2")

    return True


# Valide automatiquement au import
try:
    validate_config()
except ValueError as e:
    raise ValueError(f"Configuration invalide: {str(e)}")


# ============================================================================
# UTILITIES
# ============================================================================

def gamma_from_sigma_lower(sigma_lower: float) -> float:
    """Retourne le gain de pas gamma = 1 / (8 sigma) associé à une borne sigma."""
    if sigma_lower <= 0:
        raise ValueError(f"La borne sigma doit être strictement positive. Reçu: {sigma_lower}")
    return 1.0 / (8.0 * sigma_lower)