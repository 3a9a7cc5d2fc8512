"""Application layer: protocol messages (``host.messages``) and the network
runner (``host.runtime``)."""
