import sys

try:
    import numpy
    print(f"numpy {numpy.__version__} imported successfully")
    import pandas
    print(f"pandas {pandas.__version__} imported successfully")
    import rich
    print("rich imported successfully")
except ImportError as e:
    print(f"Import failed: {e}")
    sys.exit(1)

try:
    from modules.config import config_hash, default_parameters
    params = default_parameters()
    print(f"Default parameters validate (config_hash={config_hash(*params)[:12]})")
except Exception as e:
    print(f"Default parameters failed to load: {e}")
    sys.exit(1)

print("All critical imports successful.")
