namespace wkit {}
