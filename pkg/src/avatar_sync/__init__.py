"""Authoritative session engine for a shared collaborative avatar.

A server totally orders every client action in a room, resolves it against
a single shared avatar (dances, chaos outcomes, mini-games), scores the
room's collaborative mission, and broadcasts the results so every client
sees the same event stream. Sessions are seeded and append-only logged,
so any session can be replayed byte-for-byte.
"""

__version__ = "0.1.0"
