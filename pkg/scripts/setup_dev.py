#!/usr/bin/env python3
"""Set up the fqe-inference development environment with uv."""

import subprocess
import sys


def run_command(cmd: list[str], description: str) -> bool:
    """Run a command and return success status."""
    print(f"🔄 {description}...")
    try:
        _ = subprocess.run(cmd, check=True, capture_output=True, text=True)
        print(f"✅ {description} completed successfully")
        return True
    except (subprocess.CalledProcessError, FileNotFoundError) as e:
        print(f"❌ {description} failed: {e}")
        if getattr(e, "stdout", None):
            print(f"stdout: {e.stdout}")
        if getattr(e, "stderr", None):
            print(f"stderr: {e.stderr}")
        return False


def main():
    """Install dependencies, the package itself and check the toolchain."""
    print("🚀 Setting up the fqe-inference development environment with uv")
    print("=" * 60)

    if not run_command(["uv", "--version"], "Checking uv installation"):
        print("❌ uv is not installed. Please install uv first:")
        print("   curl -LsSf https://astral.sh/uv/install.sh | sh")
        sys.exit(1)

    steps = [
        (["uv", "sync", "--extra", "dev"], "Installing dependencies"),
        (["uv", "pip", "install", "-e", "."], "Installing package in development mode"),
        (["uv", "run", "fqe-inference", "--version"], "Checking the command-line entry point"),
        (["uv", "run", "pytest", "--version"], "Verifying pytest installation"),
        (["uv", "run", "ruff", "--version"], "Verifying ruff installation"),
    ]
    for cmd, description in steps:
        if not run_command(cmd, description):
            sys.exit(1)

    print("\n🎉 Development environment setup completed!")
    print("\nNext steps:")
    print("1. Run the fast tests: uv run pytest")
    print("2. Run the Monte-Carlo acceptance tests: uv run pytest -m slow")
    print("3. Lint and format: uv run ruff check . && uv run ruff format .")
    print("4. Try the CLI: uv run fqe-inference gen-data --instance two_state --episodes 500 --seed 1 --output runs")


if __name__ == "__main__":
    main()
