"""Executor components for the sensikit command line"""

from .command_executor import COMMANDS, CommandExecutor

__all__ = ["COMMANDS", "CommandExecutor"]
