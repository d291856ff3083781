"""Statevector simulation and benchmark harness for Bell-type inequality
violations on the two-qubit Bell state and the four-qubit Dicke state."""

__version__ = "0.1.0"
