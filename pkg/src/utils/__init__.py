# Utility modules: numerics, validation, console helpers
