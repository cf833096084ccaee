from dataclasses import dataclass, field

from .errors import UsageError
from .mpw_config import SystemParams


@dataclass(frozen=True)
class Preset:
    name: str
    base: SystemParams
    axes: tuple = field(default_factory=tuple)  # "name=start:stop:step" tokens, outer axis first
    description: str = ""


PRESETS = {
    preset.name: preset
    for preset in (
        Preset(
            "heatmap",
            SystemParams(n_f=6, n_b=6, eps_f=5.0, eps_b=5.0, v_b=-2.0),
            ("vf=-1:0:0.025", "mu=0:1:0.025"),
            "12-particle witness over fermion correlation and exchange strength",
        ),
        Preset(
            "transfer-8",
            SystemParams(n_f=4, n_b=4, eps_f=1.0, eps_b=1.0, v_f=-0.4, v_b=-2.0),
            ("mu=0:1:0.02",),
            "8-particle transfer of correlation from the boson to the fermion sector",
        ),
        Preset(
            "transfer-12",
            SystemParams(n_f=6, n_b=6, eps_f=5.0, eps_b=5.0, v_f=-0.4, v_b=-2.0),
            ("mu=0:1:0.02",),
            "12-particle transfer of correlation from the boson to the fermion sector",
        ),
        Preset(
            "electron-phonon-uncorrelated",
            SystemParams(n_f=6, n_b=6, eps_f=3.0, eps_b=0.3, v_f=-0.08, v_b=0.0),
            ("mu=0:1:0.02",),
            "weakly correlated electrons, uncorrelated phonons",
        ),
        Preset(
            "electron-phonon-correlated",
            SystemParams(n_f=6, n_b=6, eps_f=3.0, eps_b=0.3, v_f=-0.8, v_b=-0.08),
            ("mu=0:1:0.02",),
            "correlated electrons and phonons",
        ),
        Preset(
            "strong-lmg",
            SystemParams(n_f=6, n_b=0, eps_f=1.0, v_f=-50.0),
            (),
            "single-sector strong-pairing limit (lambda_G = 2.89 at N = 6)",
        ),
    )
}


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}, expected one of {', '.join(sorted(PRESETS))}")
    return PRESETS[name]
