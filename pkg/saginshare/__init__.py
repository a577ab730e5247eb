"""saginshare - two-operator SAGIN spectrum and service sharing simulator."""

__version__ = "0.1.0"
