"""
Configuration loader module for the switched-system realization toolkit.

Handles loading and parsing of the YAML settings file, providing access to
tolerance profiles and size limits. The module-level constants are the
library defaults; the YAML file only matters to callers that ask for it.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import yaml

logger = logging.getLogger(__name__)

# Application-wide configuration constants
DEFAULT_RANK_TOL = 1e-9  # relative to the largest singular value
DEFAULT_GCR_TOL = 1e-9  # absolute, on outputs
DEFAULT_MORPHISM_TOL = 1e-9
DEFAULT_VALIDATION_TOL = 1e-8
DEFAULT_AMBIGUITY_FACTOR = 10.0

# Size guards
HANKEL_MAX_ENTRIES = 100_000_000
GCR_MAX_EXPERIMENTS = 10_000
ORACLE_MAX_WORDS = 200_000

# Output settings
OUTPUT_DIR = "output"
SETTINGS_FILENAME = "settings.yaml"

_DEFAULT_CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"

_PROFILE_KEYS = ('rank_tol', 'gcr_tol', 'morphism_tol', 'validation_tol', 'ambiguity_factor')


@dataclass(frozen=True)
class ToleranceProfile:
    """Named set of tolerances threaded through every numerical decision."""

    name: str = "default"
    rank_tol: float = DEFAULT_RANK_TOL
    gcr_tol: float = DEFAULT_GCR_TOL
    morphism_tol: float = DEFAULT_MORPHISM_TOL
    validation_tol: float = DEFAULT_VALIDATION_TOL
    ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR
    description: str = ""

    def as_dict(self) -> Dict[str, float]:
        return {key: getattr(self, key) for key in _PROFILE_KEYS}


class ConfigLoader:
    """Handles loading and accessing configuration data from YAML files."""

    def __init__(self, config_dir: Optional[str] = None):
        """
        Initialize configuration loader.

        Args:
            config_dir: Directory containing settings.yaml; defaults to the
                repository's config/ directory
        """
        self.config_dir = Path(config_dir) if config_dir else _DEFAULT_CONFIG_DIR
        self._settings_data: Optional[Dict] = None

        self._load_settings()

    def _load_settings(self) -> None:
        """Load settings configuration from YAML file."""
        settings_file = self.config_dir / SETTINGS_FILENAME

        if not settings_file.exists():
            raise FileNotFoundError(f"Settings file not found: {settings_file}")

        try:
            with open(settings_file, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ValueError(f"Error parsing settings configuration: {e}")

        if not data or 'profiles' not in data:
            raise ValueError("Invalid settings configuration: missing 'profiles' section")

        for name, profile in data['profiles'].items():
            missing = [key for key in _PROFILE_KEYS if key not in profile]
            if missing:
                raise ValueError(f"Profile '{name}' is missing keys: {', '.join(missing)}")

        self._settings_data = data
        logger.info(f"Loaded {len(data['profiles'])} tolerance profiles from {settings_file}")

    def get_profile(self, profile_name: Optional[str] = None) -> ToleranceProfile:
        """
        Get a tolerance profile by name.

        Args:
            profile_name: Name of the profile; None selects the default one

        Returns:
            ToleranceProfile with float-valued tolerances

        Raises:
            ValueError: If the profile doesn't exist
        """
        name = profile_name or self.get_default_profile()
        profiles = self._settings_data['profiles']

        if name not in profiles:
            available = ', '.join(profiles.keys())
            raise ValueError(f"Profile '{name}' not found. Available: {available}")

        raw = profiles[name]
        return ToleranceProfile(
            name=name,
            description=raw.get('description', ''),
            **{key: float(raw[key]) for key in _PROFILE_KEYS},
        )

    def get_default_profile(self) -> str:
        """Get the default profile name from config"""
        return self._settings_data.get('metadata', {}).get('default_profile', 'standard')

    def list_available_profiles(self) -> Dict[str, str]:
        """
        Get all available profiles with their descriptions.

        Returns:
            Dict mapping profile names to descriptions
        """
        return {
            name: profile.get('description', '')
            for name, profile in self._settings_data['profiles'].items()
        }

    def get_limit(self, limit_name: str) -> int:
        """Get a size limit, falling back to the module default."""
        defaults = {
            'hankel_max_entries': HANKEL_MAX_ENTRIES,
            'gcr_max_experiments': GCR_MAX_EXPERIMENTS,
            'oracle_max_words': ORACLE_MAX_WORDS,
        }
        if limit_name not in defaults:
            raise ValueError(f"Unknown limit '{limit_name}'. Available: {', '.join(defaults)}")
        return int(self._settings_data.get('limits', {}).get(limit_name, defaults[limit_name]))


# Global configuration loader instance
_config_loader: Optional[ConfigLoader] = None


def get_config_loader() -> ConfigLoader:
    """
    Get the global configuration loader instance.

    Returns:
        ConfigLoader instance
    """
    global _config_loader

    if _config_loader is None:
        _config_loader = ConfigLoader()

    return _config_loader


def get_profile(profile_name: Optional[str] = None) -> ToleranceProfile:
    """Get a tolerance profile using global loader."""
    return get_config_loader().get_profile(profile_name)


def get_default_profile() -> str:
    """Get default profile using global loader."""
    return get_config_loader().get_default_profile()


def list_available_profiles() -> Dict[str, str]:
    """List tolerance profiles using global loader."""
    return get_config_loader().list_available_profiles()


def get_limit(limit_name: str) -> int:
    """Get a size limit using global loader."""
    return get_config_loader().get_limit(limit_name)
