from .core import (
    AllocEv, Alloc, AssertionFailed, Cas, Check, CheckEv, Coin, ConfView, Configuration,
    Deliver, Drop, Fork, Halt, Load, Loc, Message, NewSocket, Pure, Receive, RecvEv, Send,
    SendEv, SetBlocking, SocketAddr, SocketBind, SocketState, Store, StuckThread,
    ThreadStep, events_of, sendto_all, wait_receivefrom,
)
from .sched import FairPolicy, Policy, RandomPolicy, ScriptedPolicy, make_policy

__all__ = [
    "AllocEv", "Alloc", "AssertionFailed", "Cas", "Check", "CheckEv", "Coin", "ConfView",
    "Configuration", "Deliver", "Drop", "Fork", "Halt", "Load", "Loc", "Message",
    "NewSocket", "Pure", "Receive", "RecvEv", "Send", "SendEv", "SetBlocking",
    "SocketAddr", "SocketBind", "SocketState", "Store", "StuckThread", "ThreadStep",
    "events_of", "sendto_all", "wait_receivefrom", "FairPolicy", "Policy",
    "RandomPolicy", "ScriptedPolicy", "make_policy",
]
