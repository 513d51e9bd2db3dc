"""CLI sub-command registration."""

import argparse


def register_commands(
    subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]",
) -> None:
    """Add every sub-command parser; each sets a `handler` default that
    takes the parsed namespace and returns the exit status.
    """
    from commands import net, ptp_sweep, simulate

    ptp_sweep.register(subparsers)
    net.register(subparsers)
    simulate.register(subparsers)
