"""
Test suite for Deep Research Report Agent
Focus on critical failure points: JSON parsing and Rate Limiting
"""
