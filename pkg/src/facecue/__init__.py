"""facecue: a desk-scale social-cueing pipeline over facial landmark streams.

Landmarks in -> expression scores -> hysteresis-segmented expressive events ->
rate-limited cues, with CRC-protected session journals, engagement metrics,
a framed device-link protocol, and an HTTP review API on top.
"""

__version__ = "0.1.0"
