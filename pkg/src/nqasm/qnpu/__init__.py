"""Simulated QNPU: scheduler, executor and network stack."""

from .netstack import CK, MD, EntRequest, EprSocketBinding, Netstack
from .node import QNPU, AppContext
from .scheduler import Scheduler

__all__ = ["CK", "MD", "EntRequest", "EprSocketBinding", "Netstack", "QNPU", "AppContext", "Scheduler"]
