#include "hpn/api.hpp"

int main(int argc, char** argv) { return hpn::api::cli_main(argc, argv); }
