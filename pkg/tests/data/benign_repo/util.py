"""Benign helpers: allowlisted lookups, literal-only sink arguments."""
import subprocess

SERVICES = {"web": "nginx", "db": "postgres"}


def lookup_status(name):
    binary = SERVICES.get(name)
    if binary is None:
        return "unknown"
    return f"{binary}: ok"


def restart(service):
    if service not in SERVICES:
        return "denied"
    subprocess.run(["systemctl", "restart", "demo"], check=False)
    return "restarted"
