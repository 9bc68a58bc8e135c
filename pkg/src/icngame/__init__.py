"""ISP / content-provider pricing game."""
