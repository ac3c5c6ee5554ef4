"""Desk-scale integration runs on synthetic scenes."""
