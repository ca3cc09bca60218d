"""Interpreter-startup activation for the runtime sink shim.

Placing this directory on PYTHONPATH makes `site` import this module in
every Python process launched with that environment; installation is gated
on the VIPER_* variables and must never break the target.
"""
try:
    import viper_runtime_hook

    viper_runtime_hook.install()
except Exception:  # noqa: BLE001 - target startup must survive anything
    pass
