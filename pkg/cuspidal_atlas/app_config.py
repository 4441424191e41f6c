"""
Configuration loader for the application.
Reads 'config.ini', the environment and an optional run file, and provides
a global 'config' object plus the validated RunConfig used by every command.
"""

import os
import configparser

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

FORMATS = ("csv", "json", "svg")


class Settings(BaseSettings):
    """Environment settings (broker, parallelism)."""

    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")

    CELERY_BROKER_URL: str = "memory://"
    CELERY_RESULT_BACKEND: str = "cache+memory://"
    CUSPIDAL_ATLAS_THREADS: int = Field(default=os.cpu_count() or 1, ge=1)
    CUSPIDAL_ATLAS_EAGER: bool = True


settings = Settings()


def _is_power_of_two(n):
    return n > 0 and n & (n - 1) == 0


class RunConfig(BaseModel):
    """Every tolerance, resolution and output option of one run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # quartic_core
    cluster_tol: PositiveFloat = 1e-6
    multiple_root_spread: PositiveFloat = 1e-2
    multiplicity_tol: PositiveFloat = 1e-10
    eps_triple: PositiveFloat = 1e-10
    eps_nondeg: PositiveFloat = 1e-6
    degeneracy: PositiveFloat = 1e-12

    # joint_topology
    joint_resolution: int = 256
    max_joint_resolution: int = 4096
    eps_curve: PositiveFloat = 1e-9
    eps_grad: PositiveFloat = 1e-4
    eps_rank: PositiveFloat = 1e-6
    gradient_step: PositiveFloat = 1e-5

    # workspace_analysis
    section_resolution: int = 256
    eps_axis: PositiveFloat = 1e-6
    eps_dedup: PositiveFloat = 1e-4
    eps_ik: PositiveFloat = 1e-8

    # classifier / sweep
    scan_steps: int = Field(default=16, ge=8)
    scan_precision: PositiveFloat = 1e-4

    # cli_front
    output_dir: str = "atlas_output"
    formats: tuple[str, ...] = FORMATS
    threads: int = Field(default=1, ge=1)

    @field_validator("joint_resolution", "max_joint_resolution")
    @classmethod
    def _joint_grid(cls, value):
        if not _is_power_of_two(value) or not 64 <= value <= 4096:
            raise ValueError(f"joint resolution must be a power of two in [64, 4096], got {value}")
        return value

    @field_validator("section_resolution")
    @classmethod
    def _section_grid(cls, value):
        if not _is_power_of_two(value) or not 128 <= value <= 4096:
            raise ValueError(f"section resolution must be a power of two in [128, 4096], got {value}")
        return value

    @field_validator("formats", mode="before")
    @classmethod
    def _formats(cls, value):
        if isinstance(value, str):
            value = [s.strip() for s in value.split(",") if s.strip()]
        value = tuple(value)
        unknown = [f for f in value if f not in FORMATS]
        if unknown:
            raise ValueError(f"unknown output formats: {', '.join(unknown)}")
        return value

    def tolerances(self):
        """The numeric tolerances echoed into every report."""
        return {
            name: getattr(self, name)
            for name in (
                "cluster_tol", "multiple_root_spread", "multiplicity_tol",
                "eps_triple", "eps_nondeg", "degeneracy", "eps_curve",
                "eps_grad", "eps_rank", "gradient_step", "eps_axis",
                "eps_dedup", "eps_ik",
            )
        }

    def ik_options(self):
        """Keyword arguments for solve_ik and the root finder behind it."""
        return {
            "eps_ik": self.eps_ik,
            "cluster_tol": self.cluster_tol,
            "multiple_root_spread": self.multiple_root_spread,
            "multiplicity_tol": self.multiplicity_tol,
            "degeneracy": self.degeneracy,
        }

    def root_options(self):
        """Keyword arguments for real_roots."""
        options = self.ik_options()
        del options["eps_ik"]
        return options


def read_flat_config(path):
    """
    Reads a key = value run file. Section headers are optional and ignored,
    so a file may be flat or laid out like config.ini.
    """
    with open(path, "r") as f:
        text = f.read()
    parser = configparser.ConfigParser()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser.read_string(text)
    values = {}
    for section in parser.sections():
        values.update(parser[section])
    return values


class AppConfig:
    """Loads and holds all application configuration from config.ini."""

    _SECTIONS = {
        "quartic": ("cluster_tol", "multiple_root_spread", "multiplicity_tol",
                    "eps_triple", "eps_nondeg", "degeneracy"),
        "topology": ("joint_resolution", "max_joint_resolution", "eps_curve",
                     "eps_grad", "eps_rank", "gradient_step"),
        "workspace": ("section_resolution", "eps_axis", "eps_dedup", "eps_ik"),
        "sweep": ("scan_steps", "scan_precision"),
        "paths": ("output_dir", "formats"),
    }

    def __init__(self, config_path='config.ini'):
        parser = configparser.ConfigParser()

        self.SCRIPT_DIR = os.path.abspath(os.path.dirname(__file__))
        # Look for config.ini in the *root* directory (one level up)
        config_file_path = os.path.join(self.SCRIPT_DIR, '..', config_path)

        if not os.path.exists(config_file_path):
            print(f"INFO: Config file not found. Built-in defaults will be used.")

        parser.read(config_file_path)

        self.APP_VERSION = parser.get('server', 'app_version', fallback='v1.0 (numeric-atlas)')
        self.LOG_LEVEL = parser.get('server', 'log_level', fallback='INFO').upper()

        self.RUN_DEFAULTS = {}
        for section, keys in self._SECTIONS.items():
            for key in keys:
                if parser.has_option(section, key):
                    self.RUN_DEFAULTS[key] = parser.get(section, key)

    def run_config(self, config_file=None, **overrides):
        """
        Builds the RunConfig: config.ini defaults, then the optional run file,
        then explicit overrides (CLI flags). Later sources win.
        """
        values = dict(self.RUN_DEFAULTS)
        if config_file:
            values.update(read_flat_config(config_file))
        values.update({k: v for k, v in overrides.items() if v is not None})
        values.setdefault("threads", settings.CUSPIDAL_ATLAS_THREADS)
        return RunConfig(**values)


config = AppConfig('config.ini')
